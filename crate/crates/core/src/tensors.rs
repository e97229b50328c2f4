//! Dense symmetric tensor arithmetic: outer powers, symmetrization,
//! matricization, contractions, and the spectral-norm bracket used as the
//! estimation error metric.
//!
//! The true spectral norm `‖T‖ = sup |⟨T, u_1 ⊗ … ⊗ u_k⟩|` is NP-hard for
//! `k ≥ 3`, so the crate works with a bracket instead:
//!
//! - [`SymTensor::spectral_norm_upper`] — the minimum operator norm over
//!   balanced matricizations, which always dominates `‖T‖`;
//! - [`SymTensor::spectral_norm_lower`] — the best rank-one witness found by
//!   symmetric higher-order power iteration, which never exceeds `‖T‖`.
//!
//! Error tolerances asserted against the upper bound therefore hold a
//! fortiori for the true norm.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{self, UnitVector};
use crate::{Error, Result};

/// Dense storage cap: `d^k` entries.
pub const DENSE_CAP: usize = 10_000_000;

/// Symmetrization walks all `k!` permutation orbits; capped by order.
pub const SYMMETRIZE_ORDER_CAP: usize = 6;

/// Dense order-`k`, dimension-`d` tensor in canonical row-major multi-index
/// layout. Order 0 is a scalar, order 1 a vector. Instances produced by this
/// module are symmetric (invariant under index permutations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorIo", into = "TensorIo")]
pub struct SymTensor {
    order: usize,
    dim: usize,
    coeffs: Vec<f64>,
}

/// Wire format: `{order, dim, coeffs, layout: "row-major"}`.
#[derive(Serialize, Deserialize)]
struct TensorIo {
    order: usize,
    dim: usize,
    coeffs: Vec<f64>,
    layout: String,
}

impl TryFrom<TensorIo> for SymTensor {
    type Error = Error;
    fn try_from(io: TensorIo) -> Result<Self> {
        if io.layout != "row-major" {
            return Err(Error::MalformedDataset(format!(
                "unsupported tensor layout {:?}",
                io.layout
            )));
        }
        let expected = dense_len(io.order, io.dim)?;
        if io.coeffs.len() != expected {
            return Err(Error::MalformedDataset(format!(
                "tensor coeffs length {} != {}^{} = {}",
                io.coeffs.len(),
                io.dim,
                io.order,
                expected
            )));
        }
        Ok(SymTensor {
            order: io.order,
            dim: io.dim,
            coeffs: io.coeffs,
        })
    }
}

impl From<SymTensor> for TensorIo {
    fn from(t: SymTensor) -> TensorIo {
        TensorIo {
            order: t.order,
            dim: t.dim,
            coeffs: t.coeffs,
            layout: "row-major".to_string(),
        }
    }
}

fn dense_len(order: usize, dim: usize) -> Result<usize> {
    let mut len: usize = 1;
    for _ in 0..order {
        len = len.checked_mul(dim).ok_or(Error::Capacity {
            size: usize::MAX,
            cap: DENSE_CAP,
        })?;
        if len > DENSE_CAP {
            return Err(Error::Capacity {
                size: len,
                cap: DENSE_CAP,
            });
        }
    }
    Ok(len)
}

/// Decodes a flat row-major index into its multi-index digits.
pub fn decode_index(mut flat: usize, order: usize, dim: usize, out: &mut Vec<usize>) {
    out.clear();
    out.resize(order, 0);
    for slot in (0..order).rev() {
        out[slot] = flat % dim;
        flat /= dim;
    }
}

/// Encodes a multi-index into the flat row-major position.
pub fn encode_index(tuple: &[usize], dim: usize) -> usize {
    tuple.iter().fold(0, |acc, &i| acc * dim + i)
}

impl SymTensor {
    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let len = dense_len(order, dim)?;
        Ok(Self {
            order,
            dim,
            coeffs: vec![0.0; len],
        })
    }

    /// Order-0 tensor holding a single scalar. `dim` is retained so that
    /// products with identity blocks know their ambient dimension.
    pub fn scalar(dim: usize, value: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        Ok(Self {
            order: 0,
            dim,
            coeffs: vec![value],
        })
    }

    /// The order-2 identity tensor (the `d x d` identity matrix).
    pub fn identity(dim: usize) -> Result<Self> {
        let mut t = Self::zeros(2, dim)?;
        for i in 0..dim {
            t.coeffs[i * dim + i] = 1.0;
        }
        Ok(t)
    }

    /// Wraps coefficients verified to be permutation-invariant within 1e-10.
    pub fn from_symmetric_coeffs(order: usize, dim: usize, coeffs: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let len = dense_len(order, dim)?;
        assert_eq!(coeffs.len(), len, "coefficient length mismatch");
        let t = Self { order, dim, coeffs };
        let spread = t.orbit_spread();
        if spread > 1e-10 {
            return Err(Error::MalformedDataset(format!(
                "tensor not symmetric: orbit spread {spread:e}"
            )));
        }
        Ok(t)
    }

    pub(crate) fn from_coeffs_unchecked(order: usize, dim: usize, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), dense_len(order, dim).unwrap());
        Self { order, dim, coeffs }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn entry(&self, tuple: &[usize]) -> f64 {
        assert_eq!(tuple.len(), self.order);
        self.coeffs[encode_index(tuple, self.dim)]
    }

    /// Largest deviation of any entry from its permutation-orbit mean.
    fn orbit_spread(&self) -> f64 {
        let means = self.orbit_means();
        let mut tuple = Vec::new();
        let mut worst: f64 = 0.0;
        for (flat, &c) in self.coeffs.iter().enumerate() {
            decode_index(flat, self.order, self.dim, &mut tuple);
            let key = canonical_key(&tuple, self.dim);
            let (sum, count) = means[&key];
            worst = worst.max((c - sum / count as f64).abs());
        }
        worst
    }

    fn orbit_means(&self) -> HashMap<u64, (f64, u32)> {
        let mut sums: HashMap<u64, (f64, u32)> = HashMap::new();
        let mut tuple = Vec::new();
        for (flat, &c) in self.coeffs.iter().enumerate() {
            decode_index(flat, self.order, self.dim, &mut tuple);
            let key = canonical_key(&tuple, self.dim);
            let e = sums.entry(key).or_insert((0.0, 0));
            e.0 += c;
            e.1 += 1;
        }
        sums
    }

    pub fn scale(&mut self, c: f64) {
        for x in &mut self.coeffs {
            *x *= c;
        }
    }

    pub fn add_scaled(&mut self, other: &SymTensor, c: f64) {
        assert_eq!(self.order, other.order);
        assert_eq!(self.dim, other.dim);
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += c * y;
        }
    }

    pub fn sub(&self, other: &SymTensor) -> SymTensor {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Full contraction `⟨T, v^{⊗k}⟩` by iterated mode contraction; `v^{⊗k}`
    /// is never materialized.
    pub fn apply(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        let mut cur = self.coeffs.clone();
        for _ in 0..self.order {
            cur = contract_last(&cur, self.dim, v);
        }
        Ok(cur[0])
    }

    /// Contracts all modes but the first with `v`, returning `T·v^{⊗(k-1)}`.
    pub fn contract_to_vector(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        assert!(self.order >= 1, "needs at least one mode");
        let mut cur = self.coeffs.clone();
        for _ in 0..self.order - 1 {
            cur = contract_last(&cur, self.dim, v);
        }
        Ok(cur)
    }

    /// Flattens modes `rows` (0-based) into matrix rows, the complement into
    /// columns. The map is a bijection on entries and round-trips exactly.
    pub fn matricize(&self, rows: &[usize]) -> Result<Matricization> {
        let mut row_modes = rows.to_vec();
        row_modes.sort_unstable();
        row_modes.dedup();
        if row_modes.len() != rows.len() || row_modes.iter().any(|&m| m >= self.order) {
            return Err(Error::InvalidIndexSet(format!(
                "{rows:?} is not a subset of 0..{}",
                self.order
            )));
        }
        let col_modes: Vec<usize> = (0..self.order).filter(|m| !row_modes.contains(m)).collect();
        let nrows = self.dim.pow(row_modes.len() as u32);
        let ncols = self.dim.pow(col_modes.len() as u32);
        let mut data = vec![0.0; nrows * ncols];
        let mut tuple = Vec::new();
        for (flat, &c) in self.coeffs.iter().enumerate() {
            decode_index(flat, self.order, self.dim, &mut tuple);
            let r = row_modes.iter().fold(0, |acc, &m| acc * self.dim + tuple[m]);
            let col = col_modes.iter().fold(0, |acc, &m| acc * self.dim + tuple[m]);
            data[r * ncols + col] = c;
        }
        Ok(Matricization {
            source_order: self.order,
            dim: self.dim,
            row_modes,
            col_modes,
            nrows,
            ncols,
            data,
        })
    }

    /// Minimum over balanced splits `|I| = ⌊k/2⌋` of the matricization
    /// operator norm. Every matricization dominates the tensor spectral norm,
    /// so the minimum still does.
    pub fn spectral_norm_upper(&self) -> f64 {
        assert!(self.order >= 1, "spectral norm needs order >= 1");
        let s = self.order / 2;
        let mut best = f64::INFINITY;
        for rows in combinations(self.order, s) {
            let mat = self.matricize(&rows).expect("valid subset");
            best = best.min(mat.operator_norm());
        }
        best
    }

    /// Best rank-one witness `|⟨T, u^{⊗k}⟩|` found by symmetric higher-order
    /// power iteration from `restarts` random starts.
    pub fn spectral_norm_lower(&self, restarts: usize, iters: usize, rng: &mut impl Rng) -> f64 {
        assert!(self.order >= 1, "spectral norm needs order >= 1");
        if self.coeffs.iter().all(|&c| c == 0.0) {
            return 0.0;
        }
        let mut best: f64 = 0.0;
        for _ in 0..restarts {
            let mut u = geometry::sample_uniform_sphere(self.dim, rng)
                .expect("dim >= 2")
                .into_vec();
            for _ in 0..iters {
                let w = self.contract_to_vector(&u).expect("dims match");
                let norm = geometry::l2_norm(&w);
                if norm < 1e-300 {
                    break;
                }
                u = w.into_iter().map(|x| x / norm).collect();
                best = best.max(self.apply(&u).expect("dims match").abs());
            }
        }
        best
    }
}

fn contract_last(coeffs: &[f64], dim: usize, v: &[f64]) -> Vec<f64> {
    let out_len = coeffs.len() / dim;
    let mut out = vec![0.0; out_len];
    for (r, slot) in out.iter_mut().enumerate() {
        let base = r * dim;
        let mut s = 0.0;
        for (c, &vc) in v.iter().enumerate() {
            s += coeffs[base + c] * vc;
        }
        *slot = s;
    }
    out
}

/// Packs a sorted copy of `tuple` into a base-`dim` key.
fn canonical_key(tuple: &[usize], dim: usize) -> u64 {
    let mut sorted: Vec<usize> = tuple.to_vec();
    sorted.sort_unstable();
    sorted.iter().fold(0u64, |acc, &i| acc * dim as u64 + i as u64)
}

/// All `size`-element subsets of `0..n`, lexicographically.
pub(crate) fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    rec(0, n, size, &mut cur, &mut out);
    out
}

/// `v^{⊗k}`: entry `(i_1..i_k) = ∏_j v_{i_j}`. Symmetric by construction.
pub fn outer_power(v: &UnitVector, order: usize) -> Result<SymTensor> {
    let dim = v.dim();
    let len = dense_len(order, dim)?;
    let s = v.as_slice();
    let mut coeffs = vec![0.0; len];
    let mut tuple = Vec::new();
    for (flat, slot) in coeffs.iter_mut().enumerate() {
        decode_index(flat, order, dim, &mut tuple);
        *slot = tuple.iter().map(|&i| s[i]).product();
    }
    Ok(SymTensor { order, dim, coeffs })
}

/// Projects an arbitrary dense tensor onto symmetric tensors:
/// `Sym(T) = (1/k!) Σ_π T^π`. Idempotent and linear. Computed by averaging
/// permutation orbits rather than looping over `S_k`.
pub fn symmetrize(order: usize, dim: usize, coeffs: &[f64]) -> Result<SymTensor> {
    if order > SYMMETRIZE_ORDER_CAP {
        return Err(Error::OrderCap {
            order,
            cap: SYMMETRIZE_ORDER_CAP,
        });
    }
    let len = dense_len(order, dim)?;
    assert_eq!(coeffs.len(), len, "coefficient length mismatch");
    let mut sums: HashMap<u64, (f64, u32)> = HashMap::new();
    let mut tuple = Vec::new();
    for (flat, &c) in coeffs.iter().enumerate() {
        decode_index(flat, order, dim, &mut tuple);
        let e = sums.entry(canonical_key(&tuple, dim)).or_insert((0.0, 0));
        e.0 += c;
        e.1 += 1;
    }
    let mut out = vec![0.0; len];
    for (flat, slot) in out.iter_mut().enumerate() {
        decode_index(flat, order, dim, &mut tuple);
        let (sum, count) = sums[&canonical_key(&tuple, dim)];
        *slot = sum / count as f64;
    }
    Ok(SymTensor { order, dim, coeffs: out })
}

/// `Sym(base ⊗ I^{⊗copies})`: the symmetrized product of a symmetric tensor
/// with identity blocks, the basis element of the graded-query recursion.
pub fn sym_outer_with_identity(base: &SymTensor, copies: usize) -> Result<SymTensor> {
    let order = base.order() + 2 * copies;
    let dim = base.dim();
    let len = dense_len(order, dim)?;
    let mut coeffs = vec![0.0; len];
    let mut tuple = Vec::new();
    for (flat, slot) in coeffs.iter_mut().enumerate() {
        decode_index(flat, order, dim, &mut tuple);
        let mut ok = true;
        for c in 0..copies {
            let a = tuple[base.order() + 2 * c];
            let b = tuple[base.order() + 2 * c + 1];
            if a != b {
                ok = false;
                break;
            }
        }
        if ok {
            *slot = base.coeffs[encode_index(&tuple[..base.order()], dim)];
        }
    }
    symmetrize(order, dim, &coeffs)
}

/// A tensor flattened along an index partition, with enough bookkeeping to
/// reshape back exactly.
#[derive(Debug, Clone)]
pub struct Matricization {
    source_order: usize,
    dim: usize,
    row_modes: Vec<usize>,
    col_modes: Vec<usize>,
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matricization {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row_modes(&self) -> &[usize] {
        &self.row_modes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.ncols + c]
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let m = nalgebra::DMatrix::from_row_slice(self.nrows, self.ncols, &self.data);
        m.singular_values().max()
    }

    /// Inverse of [`SymTensor::matricize`]; bit-exact.
    pub fn unmatricize(&self) -> SymTensor {
        let len = self.data.len();
        let mut coeffs = vec![0.0; len];
        let mut row_tuple = Vec::new();
        let mut col_tuple = Vec::new();
        let mut tuple = vec![0usize; self.source_order];
        for r in 0..self.nrows {
            decode_index(r, self.row_modes.len(), self.dim, &mut row_tuple);
            for c in 0..self.ncols {
                decode_index(c, self.col_modes.len(), self.dim, &mut col_tuple);
                for (pos, &m) in self.row_modes.iter().enumerate() {
                    tuple[m] = row_tuple[pos];
                }
                for (pos, &m) in self.col_modes.iter().enumerate() {
                    tuple[m] = col_tuple[pos];
                }
                coeffs[encode_index(&tuple, self.dim)] = self.data[r * self.ncols + c];
            }
        }
        SymTensor {
            order: self.source_order,
            dim: self.dim,
            coeffs,
        }
    }
}
