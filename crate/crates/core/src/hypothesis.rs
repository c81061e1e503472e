//! Deterministic tests on the type of a sample: empirical mutual information,
//! Hoeffding, and the generalized likelihood ratio.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distributions::divergence::{kl_slices, mi_slice};
use crate::distributions::{EmpiricalType, FinitePmf};
use crate::error::{Error, Result};
use crate::exponents::{achievability_margin, ExponentPair};

#[derive(Clone, Debug)]
pub struct TestConfig {
    pub pair: ExponentPair,
    pub epsilon: f64,
    /// The null distribution.
    pub reference: FinitePmf,
}

impl TestConfig {
    pub fn new(pair: ExponentPair, epsilon: f64, reference: FinitePmf) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        reference.require_joint()?;
        Ok(Self {
            pair,
            epsilon,
            reference,
        })
    }

    fn check(&self, t: &EmpiricalType) -> Result<()> {
        if t.shape() != self.reference.shape() {
            return Err(Error::ShapeMismatch {
                left: t.shape().to_string(),
                right: self.reference.shape().to_string(),
            });
        }
        Ok(())
    }
}

/// `decision` is 1 when the test declares the alternative (independence).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: u8,
    pub statistic: f64,
}

impl Verdict {
    fn new(one: bool, statistic: f64) -> Self {
        Self {
            decision: u8::from(one),
            statistic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestKind {
    Emi,
    Hoeffding,
    Glrt,
}

impl TestKind {
    pub const ALL: [TestKind; 3] = [TestKind::Emi, TestKind::Hoeffding, TestKind::Glrt];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Emi => "emi",
            TestKind::Hoeffding => "hoeffding",
            TestKind::Glrt => "glrt",
        }
    }

    pub fn run(self, t: &EmpiricalType, cfg: &TestConfig) -> Result<Verdict> {
        match self {
            TestKind::Emi => emi_test(t, cfg),
            TestKind::Hoeffding => hoeffding_test(t, cfg),
            TestKind::Glrt => glrt_test(t, cfg),
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TestKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown test {s:?}; expected emi, hoeffding or glrt"
                ))
            })
    }
}

/// Type of zero-based `(x, y)` samples over a `rows × cols` alphabet.
pub fn empirical_type(
    rows: usize,
    cols: usize,
    samples: &[(usize, usize)],
) -> Result<EmpiricalType> {
    EmpiricalType::from_samples(rows, cols, samples)
}

fn type_mi(t: &EmpiricalType) -> f64 {
    let (rows, cols) = match t.shape() {
        crate::distributions::Shape::Joint { rows, cols } => (rows, cols),
        crate::distributions::Shape::Marginal(_) => unreachable!("types are joint"),
    };
    mi_slice(&t.frequencies(), rows, cols)
}

/// Decides 1 iff `I(type) < e_q + ε`.
pub fn emi_test(t: &EmpiricalType, cfg: &TestConfig) -> Result<Verdict> {
    cfg.check(t)?;
    let s = type_mi(t);
    Ok(Verdict::new(s < cfg.pair.e_q + cfg.epsilon, s))
}

/// Decides 0 iff `D(type‖P) < e_p + ε`.
pub fn hoeffding_test(t: &EmpiricalType, cfg: &TestConfig) -> Result<Verdict> {
    cfg.check(t)?;
    let s = kl_slices(&t.frequencies(), cfg.reference.probs());
    Ok(Verdict::new(!(s < cfg.pair.e_p + cfg.epsilon), s))
}

/// `I(type) − D(type‖P)`; `−∞` when the type leaves `supp P`.
pub fn glrt_statistic(t: &EmpiricalType, p: &FinitePmf) -> Result<f64> {
    p.require_joint()?;
    if t.shape() != p.shape() {
        return Err(Error::ShapeMismatch {
            left: t.shape().to_string(),
            right: p.shape().to_string(),
        });
    }
    let d = kl_slices(&t.frequencies(), p.probs());
    if d.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(type_mi(t) - d)
}

/// Decides 1 iff the statistic is at most `e_q − e_p`.
pub fn glrt_test(t: &EmpiricalType, cfg: &TestConfig) -> Result<Verdict> {
    cfg.check(t)?;
    let s = glrt_statistic(t, &cfg.reference)?;
    Ok(Verdict::new(s <= cfg.pair.e_q - cfg.pair.e_p, s))
}

/// Half the estimated achievability margin of `pair`.
pub fn epsilon_margin(p: &FinitePmf, pair: ExponentPair, starts: usize) -> Result<f64> {
    let margin = achievability_margin(p, pair, starts)?;
    if margin.is_nan() || margin <= 0.0 {
        return Err(Error::Precondition(format!(
            "pair ({}, {}) is not strictly achievable: margin {margin:e}",
            pair.e_p, pair.e_q
        )));
    }
    Ok(margin / 2.0)
}

/// Reads whitespace-separated one-based `x y` pairs, one per line; blank
/// lines and `#` comments are skipped. Returns zero-based indices.
pub fn parse_samples(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let field = format!("line {}", k + 1);
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::parse(field, "expected two indices"));
        };
        let idx = |s: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(Error::parse(
                    field.clone(),
                    format!("{s:?} is not a positive index"),
                )),
            }
        };
        out.push((idx(a)?, idx(b)?));
    }
    if out.is_empty() {
        return Err(Error::parse("samples", "no samples"));
    }
    Ok(out)
}

pub fn format_samples(samples: &[(usize, usize)]) -> String {
    samples
        .iter()
        .map(|(x, y)| format!("{} {}\n", x + 1, y + 1))
        .collect()
}

pub fn read_samples(path: impl AsRef<Path>) -> Result<Vec<(usize, usize)>> {
    parse_samples(&std::fs::read_to_string(path)?)
}
