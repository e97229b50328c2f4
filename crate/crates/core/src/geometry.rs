//! Unit-sphere primitives: sampling, normalization, Haar rotations, and the
//! reproducible randomness contract used by every other module.
//!
//! Randomness is organized as [`RngStream`] values: a `(seed, stream_id)`
//! pair that deterministically names a ChaCha8 stream. Identical pairs yield
//! identical draw sequences on every platform; distinct `stream_id`s give
//! statistically independent streams, so parallel trials simply use the trial
//! index as the stream id.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Norm below which a vector is considered unnormalizable.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// A point on the unit sphere `S^{d-1}`: voter type, candidate direction, or
/// query direction. The constructor enforces `‖v‖ = 1` within 1e-12 and
/// `d ≥ 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Wraps coordinates that are already unit-norm (within 1e-12).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidDimension(coords.len()));
        }
        let norm = l2_norm(&coords);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::DegenerateVector { norm });
        }
        Ok(Self { coords })
    }

    /// Normalizes an arbitrary vector onto the sphere.
    ///
    /// Vectors with norm below [`DEGENERATE_NORM`] are rejected rather than
    /// perturbed; exact zeros are measure-zero under every population here,
    /// so hitting this is a caller bug.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidDimension(coords.len()));
        }
        let norm = l2_norm(&coords);
        if norm < DEGENERATE_NORM {
            return Err(Error::DegenerateVector { norm });
        }
        for c in &mut coords {
            *c /= norm;
        }
        Ok(Self { coords })
    }

    /// Standard basis vector `e_i`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        assert!(i < dim, "basis index {i} out of range for dimension {dim}");
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.coords, other.coords.as_slice())
    }

    pub fn dot_slice(&self, other: &[f64]) -> f64 {
        dot(&self.coords, other)
    }

    /// The antipode `-v`.
    pub fn negated(&self) -> UnitVector {
        UnitVector {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;
    fn try_from(coords: Vec<f64>) -> Result<Self> {
        UnitVector::new(coords)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(v: UnitVector) -> Vec<f64> {
        v.coords
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// A named, reproducible randomness stream.
///
/// `(seed, stream_id)` fully determines the draw sequence. Use
/// [`RngStream::substream`] to derive independent child streams (per voter,
/// per trial, per purpose) without coordinating counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Instantiates the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derives a child stream keyed by `tags` (e.g. `[trial, voter, purpose]`).
    /// The same parent and tags always name the same child.
    pub fn substream(&self, tags: &[u64]) -> RngStream {
        let mut id = splitmix64(self.stream_id ^ 0x9e37_79b9_7f4a_7c15);
        for &t in tags {
            id = splitmix64(id ^ splitmix64(t.wrapping_add(0x1234_5678_9abc_def0)));
        }
        RngStream {
            seed: self.seed,
            stream_id: id,
        }
    }
}

/// SplitMix64 finalizer; used only to mix stream ids.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A rotation matrix in `SO(d)`, stored row-major.
#[derive(Debug, Clone)]
pub struct Rotation {
    dim: usize,
    /// Row-major `d x d` entries.
    matrix: Vec<f64>,
}

impl Rotation {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.dim + col]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// Applies the rotation to a unit vector. Rotations are isometries, so
    /// the result is renormalized only against accumulated round-off.
    pub fn apply(&self, v: &UnitVector) -> UnitVector {
        let out = self.apply_slice(v.as_slice());
        UnitVector::normalized(out).expect("rotation of a unit vector is unit")
    }

    pub fn apply_slice(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| dot(&self.matrix[i * self.dim..(i + 1) * self.dim], v))
            .collect()
    }

    /// Applies the inverse rotation (the transpose).
    pub fn apply_transpose_slice(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            let vi = v[i];
            for j in 0..self.dim {
                out[j] += self.matrix[i * self.dim + j] * vi;
            }
        }
        out
    }
}

/// Draws a uniform point on `S^{d-1}` by normalizing i.i.d. standard
/// Gaussians. Rejection-free and dimension-independent.
pub fn sample_uniform_sphere(dim: usize, rng: &mut impl Rng) -> Result<UnitVector> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        // A zero Gaussian vector has probability zero; loop just in case.
        if l2_norm(&g) >= DEGENERATE_NORM {
            return UnitVector::normalized(g);
        }
    }
}

/// Draws a Haar-distributed rotation from `SO(d)`: QR of a Gaussian matrix
/// with the R-diagonal sign fixed, then determinant corrected to +1 by
/// negating the last column.
pub fn random_rotation(dim: usize, rng: &mut impl Rng) -> Result<Rotation> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let g = nalgebra::DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Fix signs so the distribution is Haar rather than QR-convention-biased.
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    if q.determinant() < 0.0 {
        let last = dim - 1;
        for i in 0..dim {
            q[(i, last)] = -q[(i, last)];
        }
    }
    let matrix = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| q[(i, j)])
        .collect();
    Ok(Rotation { dim, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_vector_enforces_norm() {
        assert!(UnitVector::new(vec![1.0, 0.0]).is_ok());
        assert!(UnitVector::new(vec![1.0, 1.0]).is_err());
        assert!(UnitVector::new(vec![1.0]).is_err());
        let v = UnitVector::normalized(vec![3.0, 4.0]).unwrap();
        assert!((v.as_slice()[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn degenerate_vector_rejected() {
        let err = UnitVector::normalized(vec![0.0, 1e-13]).unwrap_err();
        assert!(matches!(err, Error::DegenerateVector { .. }));
    }

    #[test]
    fn sample_is_unit_norm() {
        let mut rng = RngStream::new(7, 0).rng();
        for _ in 0..100 {
            let v = sample_uniform_sphere(2, &mut rng).unwrap();
            assert!((l2_norm(v.as_slice()) - 1.0).abs() <= 1e-12);
        }
        assert!(matches!(
            sample_uniform_sphere(1, &mut rng),
            Err(Error::InvalidDimension(1))
        ));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = RngStream::new(42, 3);
        let a: Vec<f64> = {
            let mut r = s.rng();
            (0..8).map(|_| r.random::<f64>()).collect()
        };
        let b: Vec<f64> = {
            let mut r = s.rng();
            (0..8).map(|_| r.random::<f64>()).collect()
        };
        assert_eq!(a, b);

        let c: Vec<f64> = {
            let mut r = RngStream::new(42, 4).rng();
            (0..8).map(|_| r.random::<f64>()).collect()
        };
        assert_ne!(a, c);

        let sub1 = s.substream(&[1, 2]);
        let sub2 = s.substream(&[1, 3]);
        assert_ne!(sub1.stream_id, sub2.stream_id);
        assert_eq!(sub1, s.substream(&[1, 2]));
    }

    #[test]
    fn rotation_is_orthogonal_with_unit_determinant() {
        let mut rng = RngStream::new(11, 0).rng();
        for d in [2usize, 3, 4, 6] {
            let rot = random_rotation(d, &mut rng).unwrap();
            // R^T R = I
            for i in 0..d {
                for j in 0..d {
                    let mut s = 0.0;
                    for k in 0..d {
                        s += rot.entry(k, i) * rot.entry(k, j);
                    }
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (s - expect).abs() < 1e-10,
                        "R^T R deviates at ({i},{j}) for d={d}"
                    );
                }
            }
            let m = nalgebra::DMatrix::from_fn(d, d, |i, j| rot.entry(i, j));
            assert!((m.determinant() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rotation_preserves_norm() {
        let mut rng = RngStream::new(5, 1).rng();
        let rot = random_rotation(4, &mut rng).unwrap();
        let v = sample_uniform_sphere(4, &mut rng).unwrap();
        let rv = rot.apply(&v);
        assert!((l2_norm(rv.as_slice()) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn so2_rotation_is_a_plane_rotation() {
        let mut rng = RngStream::new(9, 2).rng();
        let rot = random_rotation(2, &mut rng).unwrap();
        // [[cos a, -sin a], [sin a, cos a]] for some a.
        assert!((rot.entry(0, 0) - rot.entry(1, 1)).abs() < 1e-10);
        assert!((rot.entry(0, 1) + rot.entry(1, 0)).abs() < 1e-10);
        let det = rot.entry(0, 0) * rot.entry(1, 1) - rot.entry(0, 1) * rot.entry(1, 0);
        assert!((det - 1.0).abs() < 1e-10);
    }

    /// Hemisphere symmetry: the mean of `1{<u,q> >= 0}` over uniform q is 1/2.
    #[test]
    fn hemisphere_indicator_mean() {
        let mut rng = RngStream::new(2024, 0).rng();
        let u = sample_uniform_sphere(3, &mut rng).unwrap();
        let n = 1_000_000usize;
        let mut hits = 0u64;
        for _ in 0..n {
            let q = sample_uniform_sphere(3, &mut rng).unwrap();
            if u.dot(&q) >= 0.0 {
                hits += 1;
            }
        }
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 5e-3, "hemisphere fraction {frac}");
    }

    /// Empirical mean of uniform draws shrinks at the CLT rate.
    #[test]
    fn uniform_sphere_mean_is_zero() {
        let mut rng = RngStream::new(1, 0).rng();
        let n = 1_000_000usize;
        let mut mean = vec![0.0; 3];
        for _ in 0..n {
            let v = sample_uniform_sphere(3, &mut rng).unwrap();
            for (m, c) in mean.iter_mut().zip(v.as_slice()) {
                *m += c;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        assert!(l2_norm(&mean) <= 5.0 / (n as f64).sqrt());
    }

    /// E[theta theta^T] = I/d for uniform draws.
    #[test]
    fn uniform_sphere_second_moment() {
        let d = 5usize;
        let mut rng = RngStream::new(3, 0).rng();
        let n = 1_000_000usize;
        let mut acc = vec![0.0; d * d];
        for _ in 0..n {
            let v = sample_uniform_sphere(d, &mut rng).unwrap();
            let s = v.as_slice();
            for i in 0..d {
                for j in 0..d {
                    acc[i * d + j] += s[i] * s[j];
                }
            }
        }
        for (idx, a) in acc.iter().enumerate() {
            let expect = if idx / d == idx % d { 1.0 / d as f64 } else { 0.0 };
            assert!(
                (a / n as f64 - expect).abs() < 0.01,
                "second moment entry {idx} off"
            );
        }
    }

    /// Rotation invariance: <u, q> and <u, Rq> are identically distributed.
    /// Two-sample Kolmogorov-Smirnov at significance 1e-3, 10 directions u.
    #[test]
    fn rotated_uniform_matches_uniform() {
        let d = 3usize;
        let n = 20_000usize;
        let stream = RngStream::new(77, 0);
        let mut rng = stream.rng();
        let rot = random_rotation(d, &mut rng).unwrap();

        // KS critical value: c(alpha) * sqrt((n + m)/(n m)), c = sqrt(-ln(alpha/2)/2)
        let alpha: f64 = 1e-3;
        let crit = (-(alpha / 2.0).ln() / 2.0).sqrt() * ((2.0 / n as f64) as f64).sqrt();

        for trial in 0..10 {
            let mut rng_u = stream.substream(&[trial, 0]).rng();
            let u = sample_uniform_sphere(d, &mut rng_u).unwrap();
            let mut a: Vec<f64> = Vec::with_capacity(n);
            let mut b: Vec<f64> = Vec::with_capacity(n);
            let mut rng_q = stream.substream(&[trial, 1]).rng();
            for _ in 0..n {
                let q = sample_uniform_sphere(d, &mut rng_q).unwrap();
                a.push(u.dot(&q));
                b.push(u.dot(&rot.apply(&q)));
            }
            a.sort_by(|x, y| x.total_cmp(y));
            b.sort_by(|x, y| x.total_cmp(y));
            let dist = ks_statistic(&a, &b);
            assert!(dist < crit, "KS statistic {dist} >= {crit} on trial {trial}");
        }
    }

    fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
        let (mut i, mut j) = (0usize, 0usize);
        let (n, m) = (a.len(), b.len());
        let mut dist: f64 = 0.0;
        while i < n && j < m {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
            dist = dist.max(diff);
        }
        dist
    }
}
