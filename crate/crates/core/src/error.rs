//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("vector norm {norm:e} below 1e-12; cannot normalize")]
    DegenerateVector { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("tensor order {order} exceeds cap {cap}")]
    OrderCap { order: usize, cap: usize },

    #[error("dense tensor size d^k = {size} exceeds capacity {cap}")]
    Capacity { size: usize, cap: usize },

    #[error("invalid matricization row set: {0}")]
    InvalidIndexSet(String),

    #[error("population has no closed-form moment of order {order}; use the Monte Carlo oracle")]
    NotExact { order: usize },

    #[error("operation requires a finite-support population")]
    NotFiniteSupport,

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("cap angle {0} outside (0, pi/4)")]
    InvalidCapAngle(f64),

    #[error("perturbation eps {0} outside (0, 1]")]
    InvalidPerturbation(f64),

    #[error("graded threshold tau = {0} outside the open interval (0, 1)")]
    InvalidThreshold(f64),

    #[error("stochastic link violates psi(t) + psi(-t) = 1 at t = {t} (deviation {dev:e})")]
    InvalidLink { t: f64, dev: f64 },

    #[error("link carries no first-moment signal: |c_d(psi)| = {0:e} < 1e-12")]
    DegenerateLink(f64),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("estimator expects query arity {expected}, dataset has {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("estimator does not support the dataset's response model: {0}")]
    WrongModel(String),

    #[error(
        "threshold tau = {tau} is a blind spot for order {order}: |lambda_{{k,0}}| = {lambda:e} < {tol:e}"
    )]
    BlindSpot {
        order: usize,
        tau: f64,
        lambda: f64,
        tol: f64,
    },

    #[error("Funk-Hecke coefficient mu_{j} unexpectedly vanishes for odd degree (|mu| = {value:e})")]
    DegenerateMu { j: usize, value: f64 },

    #[error("harmonic decomposition not precomputed for multi-index {0}")]
    DecompositionMiss(String),

    #[error("harmonic recursion produced an inconsistent system for degree {degree}")]
    HarmonicRecursion { degree: usize },

    #[error("Nash welfare requires a strictly positive utility interval, got a = {0}")]
    NonPositiveInterval(f64),

    #[error("interval is empty: a = {a} > b = {b}")]
    EmptyInterval { a: f64, b: f64 },

    #[error("moment list covers orders up to {have}, need {need}")]
    MissingMoments { have: usize, need: usize },

    #[error("candidate list is empty")]
    EmptyCandidates,

    #[error("committee size {ell} exceeds candidate count {n}")]
    CommitteeTooLarge { ell: usize, n: usize },

    #[error("subset enumeration C({n}, {ell}) exceeds budget {budget}")]
    EnumerationBudget { n: usize, ell: usize, budget: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed dataset: {0}")]
    MalformedDataset(String),
}
