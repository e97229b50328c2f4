//! Voter-type distributions on `S^{d-1}`: sampling, exact moment oracles
//! where closed forms exist, and a Monte Carlo oracle otherwise. These are
//! the ground truth that the estimators are judged against.
//!
//! Four families:
//!
//! - [`Population::UniformSphere`] — the uniform law; odd moments vanish,
//!   even moments are symmetrized identity products.
//! - [`FiniteMixture`] — weighted atoms; every moment is a finite sum, and
//!   query probabilities `Q_t` are computable exactly.
//! - [`AntipodalCaps`] — half the mass in a cap around an axis, half around
//!   its antipode. Single pairwise comparisons are blind to this population:
//!   its hemisphere probability is 1/2 for every query.
//! - [`HarmonicPerturbedUniform`] — density `(1 ± ε h)` against the uniform
//!   law with `h = Re((x_1 + i x_2)^m)`; the `±` pair shares all moments
//!   below order `m` and differs at order `m`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{self, RngStream, UnitVector};
use crate::tensors::{self, SymTensor};
use crate::{Error, Result};

/// Weighted finite-support distribution on the sphere.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "FiniteMixtureIo", into = "FiniteMixtureIo")]
pub struct FiniteMixture {
    atoms: Vec<UnitVector>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FiniteMixtureIo {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<FiniteMixtureIo> for FiniteMixture {
    type Error = Error;
    fn try_from(io: FiniteMixtureIo) -> Result<Self> {
        let atoms = io
            .atoms
            .into_iter()
            .map(UnitVector::new)
            .collect::<Result<Vec<_>>>()?;
        FiniteMixture::new(atoms, io.weights)
    }
}

impl From<FiniteMixture> for FiniteMixtureIo {
    fn from(m: FiniteMixture) -> FiniteMixtureIo {
        FiniteMixtureIo {
            atoms: m.atoms.iter().map(|a| a.as_slice().to_vec()).collect(),
            weights: m.weights,
        }
    }
}

impl FiniteMixture {
    pub fn new(atoms: Vec<UnitVector>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidWeights(format!(
                "{} atoms vs {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let dim = atoms[0].dim();
        if atoms.iter().any(|a| a.dim() != dim) {
            return Err(Error::InvalidWeights("atoms of mixed dimension".into()));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidWeights("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        // guard against round-off excluding the last atom
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self {
            atoms,
            weights,
            cumulative,
        })
    }

    /// Point mass at a single atom.
    pub fn point_mass(atom: UnitVector) -> Self {
        Self::new(vec![atom], vec![1.0]).expect("point mass is a valid mixture")
    }

    /// The antipodal pair `{θ0: 1/2, -θ0: 1/2}`.
    pub fn antipodal_pair(atom: UnitVector) -> Self {
        let neg = atom.negated();
        Self::new(vec![atom, neg], vec![0.5, 0.5]).expect("valid mixture")
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn atoms(&self) -> &[UnitVector] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sample(&self, rng: &mut impl Rng) -> UnitVector {
        let u: f64 = rng.random();
        let idx = self
            .cumulative
            .partition_point(|&c| c < u)
            .min(self.atoms.len() - 1);
        self.atoms[idx].clone()
    }

    /// `M_k = Σ_i w_i θ_i^{⊗k}`, exact at every order.
    pub fn exact_moment(&self, order: usize) -> Result<SymTensor> {
        let mut acc = SymTensor::zeros(order, self.dim())?;
        for (atom, &w) in self.atoms.iter().zip(&self.weights) {
            let pow = tensors::outer_power(atom, order)?;
            acc.add_scaled(&pow, w);
        }
        Ok(acc)
    }

    /// Probability that a deterministic voter answers every query positively:
    /// `Σ_i w_i ∏_j 1{⟨θ_i, q_j⟩ ≥ 0}`. Ties resolve to 1, matching the
    /// response convention.
    pub fn exact_q(&self, queries: &[UnitVector]) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .filter(|(atom, _)| queries.iter().all(|q| atom.dot(q) >= 0.0))
            .map(|(_, &w)| w)
            .sum()
    }

    /// Expected utility `E[⟨θ, φ⟩]`, exact.
    pub fn exact_welfare(&self, phi: &[f64]) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(atom, &w)| w * atom.dot_slice(phi))
            .sum()
    }

    /// Exact top-choice welfare `E[max_{φ ∈ W} ⟨θ, φ⟩]`.
    pub fn exact_tcw(&self, committee: &[Vec<f64>]) -> f64 {
        assert!(!committee.is_empty());
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(atom, &w)| {
                let best = committee
                    .iter()
                    .map(|phi| atom.dot_slice(phi))
                    .fold(f64::NEG_INFINITY, f64::max);
                w * best
            })
            .sum()
    }
}

/// Half the mass uniform in a cap of angular radius `cap_angle` around
/// `axis`, half in the antipodal cap.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "AntipodalCapsIo", into = "AntipodalCapsIo")]
pub struct AntipodalCaps {
    axis: UnitVector,
    cap_angle: f64,
}

#[derive(Serialize, Deserialize)]
struct AntipodalCapsIo {
    axis: Vec<f64>,
    cap_angle: f64,
}

impl TryFrom<AntipodalCapsIo> for AntipodalCaps {
    type Error = Error;
    fn try_from(io: AntipodalCapsIo) -> Result<Self> {
        AntipodalCaps::new(UnitVector::new(io.axis)?, io.cap_angle)
    }
}

impl From<AntipodalCaps> for AntipodalCapsIo {
    fn from(c: AntipodalCaps) -> AntipodalCapsIo {
        AntipodalCapsIo {
            axis: c.axis.as_slice().to_vec(),
            cap_angle: c.cap_angle,
        }
    }
}

impl AntipodalCaps {
    pub fn new(axis: UnitVector, cap_angle: f64) -> Result<Self> {
        if !(cap_angle > 0.0 && cap_angle < std::f64::consts::FRAC_PI_4) {
            return Err(Error::InvalidCapAngle(cap_angle));
        }
        Ok(Self { axis, cap_angle })
    }

    pub fn dim(&self) -> usize {
        self.axis.dim()
    }

    pub fn axis(&self) -> &UnitVector {
        &self.axis
    }

    pub fn cap_angle(&self) -> f64 {
        self.cap_angle
    }

    pub fn sample(&self, rng: &mut impl Rng) -> UnitVector {
        let center = if rng.random::<f64>() < 0.5 {
            self.axis.clone()
        } else {
            self.axis.negated()
        };
        let d = self.dim();
        if d == 2 {
            let base = center.as_slice()[1].atan2(center.as_slice()[0]);
            let phi = base + (rng.random::<f64>() * 2.0 - 1.0) * self.cap_angle;
            return UnitVector::new(vec![phi.cos(), phi.sin()]).expect("unit by construction");
        }
        // cos-latitude marginal density on [cos a, 1] is (1-t^2)^{(d-3)/2}:
        // constant for d = 3, otherwise rejection against its max at t = cos a.
        let t_min = self.cap_angle.cos();
        let exponent = (d as f64 - 3.0) / 2.0;
        let bound = (1.0 - t_min * t_min).powf(exponent);
        let t = loop {
            let cand = t_min + rng.random::<f64>() * (1.0 - t_min);
            if d == 3 {
                break cand;
            }
            let dens = (1.0 - cand * cand).powf(exponent);
            if rng.random::<f64>() * bound <= dens {
                break cand;
            }
        };
        // uniform direction orthogonal to the cap center
        let w = loop {
            let g: Vec<f64> = (0..d)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let proj = geometry::dot(&g, center.as_slice());
            let orth: Vec<f64> = g
                .iter()
                .zip(center.as_slice())
                .map(|(gi, ci)| gi - proj * ci)
                .collect();
            if geometry::l2_norm(&orth) >= geometry::DEGENERATE_NORM {
                break UnitVector::normalized(orth).expect("nonzero");
            }
        };
        let s = (1.0 - t * t).sqrt();
        let coords: Vec<f64> = center
            .as_slice()
            .iter()
            .zip(w.as_slice())
            .map(|(c, wi)| t * c + s * wi)
            .collect();
        UnitVector::normalized(coords).expect("unit by construction")
    }
}

/// Density `(1 + sign·ε·h)` against the uniform law, with
/// `h(x) = Re((x_1 + i x_2)^degree)`. Since `|h| ≤ 1` on the sphere, any
/// `ε ≤ 1` keeps the density nonnegative.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "HarmonicPerturbedIo", into = "HarmonicPerturbedIo")]
pub struct HarmonicPerturbedUniform {
    dim: usize,
    degree: usize,
    eps: f64,
    sign: i8,
}

#[derive(Serialize, Deserialize)]
struct HarmonicPerturbedIo {
    d: usize,
    degree: usize,
    eps: f64,
    sign: i8,
}

impl TryFrom<HarmonicPerturbedIo> for HarmonicPerturbedUniform {
    type Error = Error;
    fn try_from(io: HarmonicPerturbedIo) -> Result<Self> {
        HarmonicPerturbedUniform::new(io.d, io.degree, io.eps, io.sign)
    }
}

impl From<HarmonicPerturbedUniform> for HarmonicPerturbedIo {
    fn from(p: HarmonicPerturbedUniform) -> HarmonicPerturbedIo {
        HarmonicPerturbedIo {
            d: p.dim,
            degree: p.degree,
            eps: p.eps,
            sign: p.sign,
        }
    }
}

impl HarmonicPerturbedUniform {
    pub fn new(dim: usize, degree: usize, eps: f64, sign: i8) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidPerturbation(eps));
        }
        assert!(degree >= 1, "perturbation degree must be at least 1");
        assert!(sign == 1 || sign == -1, "sign must be +1 or -1");
        Ok(Self {
            dim,
            degree,
            eps,
            sign,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// `h(x) = Re((x_1 + i x_2)^degree)`.
    pub fn h(&self, x: &[f64]) -> f64 {
        harmonic_wave(x, self.degree)
    }

    /// Rejection sampling against the uniform envelope with constant bound
    /// `1 + ε`; acceptance probability is at least `1/(1+ε) ≥ 1/2`.
    pub fn sample(&self, rng: &mut impl Rng) -> UnitVector {
        loop {
            let cand = geometry::sample_uniform_sphere(self.dim, rng).expect("dim >= 2");
            let dens = 1.0 + self.sign as f64 * self.eps * self.h(cand.as_slice());
            if rng.random::<f64>() * (1.0 + self.eps) <= dens {
                return cand;
            }
        }
    }

    /// `∫ h^2 dσ̄`, via the quadrature oracle: with `s = x_1^2 + x_2^2`,
    /// the integral is `E[s^m]/2`, and `E[s^m]` reduces to a smooth
    /// one-dimensional integral after `s = 1 - w^2`.
    pub fn h_mean_square(&self) -> f64 {
        h_mean_square(self.dim, self.degree)
    }
}

/// Real part of `(x_1 + i x_2)^m`; a degree-`m` harmonic polynomial.
pub fn harmonic_wave(x: &[f64], m: usize) -> f64 {
    debug_assert!(x.len() >= 2);
    let (mut re, mut im) = (1.0f64, 0.0f64);
    for _ in 0..m {
        let nre = re * x[0] - im * x[1];
        im = re * x[1] + im * x[0];
        re = nre;
    }
    re
}

/// `∫ Re((x_1+ix_2)^m)^2 dσ̄` over the uniform sphere law in dimension `d`.
pub fn h_mean_square(d: usize, m: usize) -> f64 {
    assert!(d >= 2);
    if d == 2 {
        // x_1^2 + x_2^2 = 1; average of cos^2(m φ) is 1/2.
        return 0.5;
    }
    // E[s^m] with s ~ Beta(1, (d-2)/2): (d-2) ∫_0^1 (1-w^2)^m w^{d-3} dw.
    let md = m as i32;
    let f = move |w: f64| (1.0 - w * w).powi(md) * w.powi(d as i32 - 3);
    let integral = crate::quad::integrate(&f, 0.0, 1.0, 1e-12).value;
    0.5 * (d as f64 - 2.0) * integral
}

/// A sampleable voter-type distribution, with exactness per moment order
/// advertised through [`Population::exact_moment`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Population {
    UniformSphere { d: usize },
    FiniteMixture(FiniteMixture),
    AntipodalCaps(AntipodalCaps),
    HarmonicPerturbedUniform(HarmonicPerturbedUniform),
}

impl Population {
    pub fn uniform(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        Ok(Population::UniformSphere { d })
    }

    pub fn dim(&self) -> usize {
        match self {
            Population::UniformSphere { d } => *d,
            Population::FiniteMixture(m) => m.dim(),
            Population::AntipodalCaps(c) => c.dim(),
            Population::HarmonicPerturbedUniform(p) => p.dim(),
        }
    }

    /// One i.i.d. draw from the population law.
    pub fn sample(&self, rng: &mut impl Rng) -> UnitVector {
        match self {
            Population::UniformSphere { d } => {
                geometry::sample_uniform_sphere(*d, rng).expect("d >= 2")
            }
            Population::FiniteMixture(m) => m.sample(rng),
            Population::AntipodalCaps(c) => c.sample(rng),
            Population::HarmonicPerturbedUniform(p) => p.sample(rng),
        }
    }

    /// Closed-form `M_k` where one exists.
    ///
    /// Finite mixtures admit every order. The uniform law has zero odd
    /// moments; its even moments are `(k-1)!! · ∏_{j<k/2} (d+2j)^{-1} ·
    /// Sym(I^{⊗k/2})`, from the Gaussian representation `θ = g/‖g‖`
    /// (`E[g^{⊗k}]` is a sum over pairings, `E[‖g‖^k] = ∏ (d+2j)`). The cap
    /// and perturbed families have no closed form here; callers fall back to
    /// [`Population::oracle_moment_mc`].
    pub fn exact_moment(&self, order: usize) -> Result<SymTensor> {
        match self {
            Population::UniformSphere { d } => {
                if order % 2 == 1 {
                    return SymTensor::zeros(order, *d);
                }
                let half = order / 2;
                let base = SymTensor::scalar(*d, 1.0)?;
                let mut t = tensors::sym_outer_with_identity(&base, half)?;
                let mut scale = 1.0;
                for j in 0..half {
                    // (2j+1) accumulates (k-1)!!, (d+2j) the chi moment
                    scale *= (2 * j + 1) as f64 / (*d as f64 + 2.0 * j as f64);
                }
                t.scale(scale);
                Ok(t)
            }
            Population::FiniteMixture(m) => m.exact_moment(order),
            Population::AntipodalCaps(_) | Population::HarmonicPerturbedUniform(_) => {
                Err(Error::NotExact { order })
            }
        }
    }

    /// Brute-force moment oracle: `(1/N) Σ θ_i^{⊗k}` with per-entry standard
    /// errors of the mean.
    pub fn oracle_moment_mc(
        &self,
        order: usize,
        samples: usize,
        stream: RngStream,
    ) -> Result<MomentOracle> {
        assert!(samples >= 1_000, "oracle needs at least 1e3 samples");
        let d = self.dim();
        let mut sum = SymTensor::zeros(order, d)?;
        let mut sumsq = SymTensor::zeros(order, d)?;
        let mut rng = stream.rng();
        for _ in 0..samples {
            let theta = self.sample(&mut rng);
            let pow = tensors::outer_power(&theta, order)?;
            sum.add_scaled(&pow, 1.0);
            // entrywise square for the variance accumulator
            let sq = SymTensor::from_coeffs_unchecked(
                order,
                d,
                pow.coeffs().iter().map(|c| c * c).collect(),
            );
            sumsq.add_scaled(&sq, 1.0);
        }
        let n = samples as f64;
        let mean = {
            let mut m = sum.clone();
            m.scale(1.0 / n);
            m
        };
        let stderr_coeffs: Vec<f64> = mean
            .coeffs()
            .iter()
            .zip(sumsq.coeffs())
            .map(|(&m, &sq)| {
                let var = ((sq - n * m * m) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            })
            .collect();
        let stderr = SymTensor::from_coeffs_unchecked(order, d, stderr_coeffs);
        Ok(MomentOracle {
            mean,
            stderr,
            samples,
        })
    }

    /// Exact all-positive response probability; finite support only.
    pub fn exact_q(&self, queries: &[UnitVector]) -> Result<f64> {
        match self {
            Population::FiniteMixture(m) => Ok(m.exact_q(queries)),
            _ => Err(Error::NotFiniteSupport),
        }
    }
}

/// Monte Carlo moment estimate with per-entry standard errors.
#[derive(Debug, Clone)]
pub struct MomentOracle {
    pub mean: SymTensor,
    pub stderr: SymTensor,
    pub samples: usize,
}
