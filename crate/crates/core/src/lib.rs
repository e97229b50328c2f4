//! Recovering moment tensors of a latent voter-type distribution on the unit
//! sphere from extremely sparse per-voter feedback, and using those moments to
//! optimize social-choice objectives.
//!
//! Voters are unit vectors `θ ∈ S^{d-1}` with linear utilities
//! `u_θ(φ) = ⟨θ, φ⟩` over candidate embeddings `φ`. Each simulated voter
//! answers one, two, or k pairwise comparison bits (`1{⟨θ,q⟩ ≥ 0}` for a query
//! direction `q`), or a single graded bit (`1{⟨θ,q⟩ ≥ τ}`). The estimators in
//! [`estimators`] invert those one-bit measurements into the moment tensors
//! `M_k = E[θ^{⊗k}]`, and [`objectives`] turns moments into welfare,
//! risk-adjusted welfare, Nash welfare, and committee (top-choice) welfare.
//!
//! Module map:
//!
//! - [`geometry`] — unit vectors, Haar rotations, reproducible RNG streams.
//! - [`tensors`] — dense symmetric tensors, matricization, spectral norms.
//! - [`populations`] — test distributions with exact / Monte Carlo moment oracles.
//! - [`elicitation`] — query generation and response simulation.
//! - [`harmonics`] — Gegenbauer polynomials, hemispherical transform
//!   coefficients, harmonic decomposition of monomials, graded-query
//!   coefficients.
//! - [`estimators`] — the moment estimators themselves.
//! - [`objectives`] — social-choice objectives computed from moments.

pub mod elicitation;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod harmonics;
pub mod objectives;
pub mod populations;
pub mod quad;
pub mod tensors;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
