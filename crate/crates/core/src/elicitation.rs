//! Query generation and voter response simulation.
//!
//! Three response models:
//!
//! - deterministic sign: `resp_θ(q) = 1{⟨θ,q⟩ ≥ 0}` (ties answer 1);
//! - stochastic: `Pr[resp = 1] = ψ(⟨θ,q⟩)` for a link with
//!   `ψ(t) + ψ(-t) = 1`, e.g. Bradley-Terry;
//! - graded threshold: `grad_θ(q) = 1{⟨θ,q⟩ ≥ τ}` for `τ ∈ (0,1)`.
//!
//! [`collect`] simulates a cohort: each voter is drawn fresh, answers `t`
//! i.i.d. uniform queries, and only the bits are retained. Estimators never
//! see `θ`; the dataset is the entire information boundary.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{self, RngStream, UnitVector};
use crate::{Error, Result};

/// Logistic link `ψ_BT(t) = 1/(1 + e^{-t})`.
///
/// Evaluated in the numerically stable two-branch form, under which
/// `ψ(t) + ψ(-t) = 1` holds exactly in floating point.
pub fn bradley_terry(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// A named response link `ψ`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum PsiLink {
    BradleyTerry,
    /// Piecewise-linear table over knots covering `[-1, 1]`.
    Tabulated(TabulatedPsi),
}

impl PsiLink {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            PsiLink::BradleyTerry => bradley_terry(t),
            PsiLink::Tabulated(tab) => tab.eval(t),
        }
    }
}

/// Tabulated link; construction checks the skew identity `ψ(t) + ψ(-t) = 1`
/// on its own knots to 1e-10.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "TabulatedPsiIo", into = "TabulatedPsiIo")]
pub struct TabulatedPsi {
    knots: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TabulatedPsiIo {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<TabulatedPsiIo> for TabulatedPsi {
    type Error = Error;
    fn try_from(io: TabulatedPsiIo) -> Result<Self> {
        TabulatedPsi::new(io.knots, io.values)
    }
}

impl From<TabulatedPsi> for TabulatedPsiIo {
    fn from(t: TabulatedPsi) -> TabulatedPsiIo {
        TabulatedPsiIo {
            knots: t.knots,
            values: t.values,
        }
    }
}

impl TabulatedPsi {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        assert_eq!(knots.len(), values.len());
        assert!(knots.len() >= 2, "need at least two knots");
        assert!(
            knots.windows(2).all(|w| w[0] < w[1]),
            "knots must be strictly increasing"
        );
        assert!(
            knots[0] <= -1.0 && *knots.last().unwrap() >= 1.0,
            "knots must cover [-1, 1]"
        );
        let tab = Self { knots, values };
        for &t in &tab.knots {
            let dev = (tab.eval(t) + tab.eval(-t) - 1.0).abs();
            if dev > 1e-10 {
                return Err(Error::InvalidLink { t, dev });
            }
        }
        Ok(tab)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(self.knots[0], *self.knots.last().unwrap());
        let hi = self.knots.partition_point(|&k| k < t).min(self.knots.len() - 1);
        if hi == 0 {
            return self.values[0];
        }
        let lo = hi - 1;
        let span = self.knots[hi] - self.knots[lo];
        let w = (t - self.knots[lo]) / span;
        self.values[lo] * (1.0 - w) + self.values[hi] * w
    }
}

/// How a simulated voter turns an inner product into a bit.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ResponseModel {
    Deterministic,
    Stochastic { psi: PsiLink },
    Graded { tau: f64 },
}

impl ResponseModel {
    pub fn stochastic_bt() -> Self {
        ResponseModel::Stochastic {
            psi: PsiLink::BradleyTerry,
        }
    }

    pub fn graded(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidThreshold(tau));
        }
        Ok(ResponseModel::Graded { tau })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ResponseModel::Graded { tau } if !(*tau > 0.0 && *tau < 1.0) => {
                Err(Error::InvalidThreshold(*tau))
            }
            _ => Ok(()),
        }
    }

    /// Compact tag for file headers and CSV columns.
    pub fn tag(&self) -> String {
        match self {
            ResponseModel::Deterministic => "deterministic".into(),
            ResponseModel::Stochastic {
                psi: PsiLink::BradleyTerry,
            } => "stochastic:bradley_terry".into(),
            ResponseModel::Stochastic { .. } => "stochastic:tabulated".into(),
            ResponseModel::Graded { tau } => format!("graded:{tau}"),
        }
    }
}

/// One voter's answer to one query. Deterministic and graded responses
/// ignore `rng`.
pub fn respond(
    theta: &UnitVector,
    query: &UnitVector,
    model: &ResponseModel,
    rng: &mut impl Rng,
) -> Result<u8> {
    model.validate()?;
    Ok(respond_unchecked(theta, query, model, rng))
}

fn respond_unchecked(
    theta: &UnitVector,
    query: &UnitVector,
    model: &ResponseModel,
    rng: &mut impl Rng,
) -> u8 {
    let t = theta.dot(query);
    match model {
        ResponseModel::Deterministic => u8::from(t >= 0.0),
        ResponseModel::Stochastic { psi } => u8::from(rng.random::<f64>() < psi.eval(t)),
        ResponseModel::Graded { tau } => u8::from(t >= *tau),
    }
}

/// One voter's record: the queries shown and the bits returned.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResponseRecord {
    #[serde(rename = "q")]
    pub queries: Vec<UnitVector>,
    #[serde(rename = "b")]
    pub bits: Vec<u8>,
}

/// A homogeneous batch of response records plus the metadata needed to
/// reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseDataset {
    pub records: Vec<ResponseRecord>,
    pub dim: usize,
    pub arity: usize,
    pub model: ResponseModel,
    pub seed: RngStream,
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    d: usize,
    t: usize,
    model: ResponseModel,
    seed: RngStream,
}

// substream purposes inside collect()
const SUB_VOTER: u64 = 0;
const SUB_QUERY: u64 = 1;
const SUB_RESPONSE: u64 = 2;

/// Simulates `voters` voters, each drawing `arity` fresh uniform queries.
///
/// Voter types, queries, and stochastic responses consume independent
/// substreams keyed by the voter index, so the dataset is bit-identical for
/// a given `(stream, population, arity, voters, model)` regardless of
/// evaluation order.
pub fn collect(
    pop: &crate::populations::Population,
    arity: usize,
    voters: usize,
    model: &ResponseModel,
    stream: RngStream,
) -> Result<ResponseDataset> {
    model.validate()?;
    assert!(arity >= 1, "arity must be at least 1");
    assert!(voters >= 1, "need at least one voter");
    let dim = pop.dim();
    let graded = matches!(model, ResponseModel::Graded { .. });
    let mut records = Vec::with_capacity(voters);
    for i in 0..voters {
        let vi = i as u64;
        let theta = pop.sample(&mut stream.substream(&[SUB_VOTER, vi]).rng());
        let mut query_rng = stream.substream(&[SUB_QUERY, vi]).rng();
        let mut resp_rng = stream.substream(&[SUB_RESPONSE, vi]).rng();
        let mut queries = Vec::with_capacity(arity);
        let mut bits = Vec::with_capacity(arity);
        for _ in 0..arity {
            let q = geometry::sample_uniform_sphere(dim, &mut query_rng)?;
            if graded {
                // graded comparisons are only meaningful for exactly unit
                // queries; never renormalize silently
                assert!(
                    (geometry::l2_norm(q.as_slice()) - 1.0).abs() <= 1e-12,
                    "graded query must be unit norm"
                );
            }
            bits.push(respond_unchecked(&theta, &q, model, &mut resp_rng));
            queries.push(q);
        }
        records.push(ResponseRecord { queries, bits });
    }
    Ok(ResponseDataset {
        records,
        dim,
        arity,
        model: model.clone(),
        seed: stream,
    })
}

impl ResponseDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Restriction to the first `arity` queries of each record (e.g. to run
    /// a single-query estimator on multi-query data).
    pub fn project_arity(&self, arity: usize) -> Result<ResponseDataset> {
        if arity == 0 || arity > self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: arity,
            });
        }
        let records = self
            .records
            .iter()
            .map(|r| ResponseRecord {
                queries: r.queries[..arity].to_vec(),
                bits: r.bits[..arity].to_vec(),
            })
            .collect();
        Ok(ResponseDataset {
            records,
            dim: self.dim,
            arity,
            model: self.model.clone(),
            seed: self.seed,
        })
    }

    /// Newline-delimited JSON: a header line with `{d, t, model, seed}`
    /// followed by one `{"q": [...], "b": [...]}` line per record.
    pub fn write_ndjson(&self, w: &mut impl Write) -> Result<()> {
        let header = DatasetHeader {
            d: self.dim,
            t: self.arity,
            model: self.model.clone(),
            seed: self.seed,
        };
        serde_json::to_writer(&mut *w, &header)?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut *w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_ndjson(r: impl BufRead) -> Result<ResponseDataset> {
        let mut lines = r.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::MalformedDataset("missing header".into()))??;
        let header: DatasetHeader = serde_json::from_str(&header_line)?;
        header.model.validate()?;
        let mut records = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ResponseRecord = serde_json::from_str(&line)?;
            if rec.queries.len() != header.t || rec.bits.len() != header.t {
                return Err(Error::MalformedDataset(format!(
                    "record arity {} != header t {}",
                    rec.queries.len(),
                    header.t
                )));
            }
            if rec.queries.iter().any(|q| q.dim() != header.d) {
                return Err(Error::MalformedDataset("query dimension mismatch".into()));
            }
            records.push(rec);
        }
        Ok(ResponseDataset {
            records,
            dim: header.d,
            arity: header.t,
            model: header.model,
            seed: header.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::populations::{AntipodalCaps, FiniteMixture, Population};

    fn e(dim: usize, i: usize) -> UnitVector {
        UnitVector::basis(dim, i).unwrap()
    }

    #[test]
    fn bradley_terry_values() {
        assert_eq!(bradley_terry(0.0), 0.5);
        assert!((bradley_terry(1.0) - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!(bradley_terry(30.0) > 0.999_999_9);
        // skew identity holds exactly in the stable form
        for t in [0.1, 0.5, 1.0, 3.7, 12.0] {
            assert_eq!(bradley_terry(t) + bradley_terry(-t), 1.0);
        }
        // monotone
        assert!(bradley_terry(0.2) < bradley_terry(0.3));
    }

    #[test]
    fn deterministic_responses_and_tie_break() {
        let mut rng = RngStream::new(1, 0).rng();
        let det = ResponseModel::Deterministic;
        assert_eq!(respond(&e(3, 0), &e(3, 0), &det, &mut rng).unwrap(), 1);
        // <e1, e2> = 0: ties answer 1
        assert_eq!(respond(&e(3, 0), &e(3, 1), &det, &mut rng).unwrap(), 1);
        assert_eq!(
            respond(&e(3, 0), &e(3, 0).negated(), &det, &mut rng).unwrap(),
            0
        );
    }

    #[test]
    fn graded_threshold_and_validation() {
        let mut rng = RngStream::new(1, 0).rng();
        let half = ResponseModel::graded(0.5).unwrap();
        assert_eq!(respond(&e(3, 0), &e(3, 0), &half, &mut rng).unwrap(), 1);
        assert_eq!(respond(&e(3, 0), &e(3, 1), &half, &mut rng).unwrap(), 0);
        assert!(ResponseModel::graded(0.0).is_err());
        assert!(ResponseModel::graded(1.0).is_err());
        let bad = ResponseModel::Graded { tau: 1.5 };
        assert!(respond(&e(3, 0), &e(3, 0), &bad, &mut rng).is_err());
    }

    #[test]
    fn negation_identity_off_ties() {
        let stream = RngStream::new(5, 0);
        let mut rng = stream.rng();
        let det = ResponseModel::Deterministic;
        for _ in 0..500 {
            let theta = geometry::sample_uniform_sphere(4, &mut rng).unwrap();
            let q = geometry::sample_uniform_sphere(4, &mut rng).unwrap();
            if theta.dot(&q) == 0.0 {
                continue;
            }
            let a = respond(&theta, &q, &det, &mut rng).unwrap();
            let b = respond(&theta, &q.negated(), &det, &mut rng).unwrap();
            assert_eq!(a, 1 - b);
        }
    }

    #[test]
    fn graded_monotone_in_threshold() {
        let stream = RngStream::new(6, 0);
        let mut rng = stream.rng();
        for _ in 0..500 {
            let theta = geometry::sample_uniform_sphere(3, &mut rng).unwrap();
            let q = geometry::sample_uniform_sphere(3, &mut rng).unwrap();
            let lo = respond(&theta, &q, &ResponseModel::graded(0.2).unwrap(), &mut rng).unwrap();
            let hi = respond(&theta, &q, &ResponseModel::graded(0.7).unwrap(), &mut rng).unwrap();
            assert!(lo >= hi);
        }
    }

    #[test]
    fn stochastic_mean_matches_link() {
        let theta = e(3, 0);
        let q = UnitVector::normalized(vec![0.8, 0.6, 0.0]).unwrap();
        let p = bradley_terry(theta.dot(&q));
        let model = ResponseModel::stochastic_bt();
        let mut rng = RngStream::new(7, 0).rng();
        let n = 100_000;
        let mut ones = 0u32;
        for _ in 0..n {
            ones += respond(&theta, &q, &model, &mut rng).unwrap() as u32;
        }
        let frac = ones as f64 / n as f64;
        assert!((frac - p).abs() <= 0.005, "frac {frac} vs psi {p}");
    }

    #[test]
    fn tabulated_link_validates_skew() {
        // linear ramp (1+t)/2 satisfies the identity
        let ok = TabulatedPsi::new(vec![-1.0, 0.0, 1.0], vec![0.0, 0.5, 1.0]);
        assert!(ok.is_ok());
        let bad = TabulatedPsi::new(vec![-1.0, 0.0, 1.0], vec![0.1, 0.5, 1.0]);
        assert!(matches!(bad, Err(Error::InvalidLink { .. })));
    }

    #[test]
    fn collect_shapes_and_reproducibility() {
        let pop = Population::uniform(3).unwrap();
        let model = ResponseModel::Deterministic;
        let ds = collect(&pop, 2, 10, &model, RngStream::new(9, 4)).unwrap();
        assert_eq!(ds.len(), 10);
        assert!(ds
            .records
            .iter()
            .all(|r| r.queries.len() == 2 && r.bits.len() == 2));
        let ds2 = collect(&pop, 2, 10, &model, RngStream::new(9, 4)).unwrap();
        assert_eq!(ds, ds2);
        let ds3 = collect(&pop, 2, 10, &model, RngStream::new(9, 5)).unwrap();
        assert_ne!(ds, ds3);
    }

    #[test]
    fn point_mass_bits_follow_hemisphere() {
        let pop = Population::FiniteMixture(FiniteMixture::point_mass(e(3, 0)));
        let ds = collect(
            &pop,
            1,
            100,
            &ResponseModel::Deterministic,
            RngStream::new(10, 0),
        )
        .unwrap();
        let mut ones = 0usize;
        for r in &ds.records {
            let expect = u8::from(e(3, 0).dot(&r.queries[0]) >= 0.0);
            assert_eq!(r.bits[0], expect);
            ones += r.bits[0] as usize;
        }
        let frac = ones as f64 / 100.0;
        assert!((frac - 0.5).abs() <= 0.15, "hemisphere fraction {frac}");
    }

    #[test]
    fn caps_population_answers_half_positive() {
        // single comparisons cannot see the antipodal structure
        let caps = AntipodalCaps::new(e(3, 0), 0.1).unwrap();
        let pop = Population::AntipodalCaps(caps);
        let ds = collect(
            &pop,
            1,
            10_000,
            &ResponseModel::Deterministic,
            RngStream::new(11, 0),
        )
        .unwrap();
        let mean: f64 =
            ds.records.iter().map(|r| r.bits[0] as f64).sum::<f64>() / ds.len() as f64;
        assert!((mean - 0.5).abs() <= 0.015, "mean bit {mean}");
    }

    #[test]
    fn ndjson_round_trip() {
        let pop = Population::uniform(2).unwrap();
        let ds = collect(
            &pop,
            2,
            25,
            &ResponseModel::stochastic_bt(),
            RngStream::new(12, 1),
        )
        .unwrap();
        let mut buf = Vec::new();
        ds.write_ndjson(&mut buf).unwrap();
        let back = ResponseDataset::read_ndjson(&buf[..]).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn project_arity_takes_prefix() {
        let pop = Population::uniform(2).unwrap();
        let ds = collect(
            &pop,
            2,
            5,
            &ResponseModel::Deterministic,
            RngStream::new(13, 0),
        )
        .unwrap();
        let p = ds.project_arity(1).unwrap();
        assert_eq!(p.arity, 1);
        for (orig, proj) in ds.records.iter().zip(&p.records) {
            assert_eq!(proj.queries[0], orig.queries[0]);
            assert_eq!(proj.bits[0], orig.bits[0]);
        }
        assert!(ds.project_arity(3).is_err());
    }
}
