//! Finite-alphabet PMFs, empirical types, and divergence functionals.

pub(crate) mod dependence;
pub(crate) mod divergence;
pub mod io;

pub use dependence::{j_alpha, j_alpha_with, JAlphaOptions};
pub use divergence::{kl_divergence, mutual_information, renyi_divergence, RenyiOrder};

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Float-backed PMFs must sum to one within this tolerance.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    Marginal(usize),
    Joint { rows: usize, cols: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Marginal(m) => m,
            Shape::Joint { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_joint(&self) -> bool {
        matches!(self, Shape::Joint { .. })
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::Marginal(m) => vec![m],
            Shape::Joint { rows, cols } => vec![rows, cols],
        }
    }

    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        let shape = match *dims {
            [m] => Shape::Marginal(m),
            [rows, cols] => Shape::Joint { rows, cols },
            _ => return Err(Error::invalid(format!("unsupported shape {dims:?}"))),
        };
        if shape.is_empty() {
            return Err(Error::invalid("empty alphabet"));
        }
        Ok(shape)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Marginal(m) => write!(f, "({m},)"),
            Shape::Joint { rows, cols } => write!(f, "({rows}, {cols})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backing {
    Float,
    Rational,
}

/// A probability mass function over a finite (possibly product) alphabet.
///
/// Joint PMFs are stored row-major: entry `(x, y)` lives at `x * cols + y`.
/// A rational-backed PMF keeps its exact masses alongside the float view;
/// every float computation reads the float view.
#[derive(Clone, Debug)]
pub struct FinitePmf {
    shape: Shape,
    probs: Vec<f64>,
    exact: Option<Arc<Vec<Rational>>>,
}

impl PartialEq for FinitePmf {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && self.probs == other.probs && self.exact == other.exact
    }
}

impl FinitePmf {
    pub fn from_floats(shape: Shape, probs: Vec<f64>) -> Result<Self> {
        check_len(shape, probs.len())?;
        if let Some(bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::invalid(format!(
                "mass {bad} is not a finite nonnegative number"
            )));
        }
        let total = neumaier_sum(probs.iter().copied());
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("masses sum to {total}, not 1")));
        }
        Ok(Self {
            shape,
            probs,
            exact: None,
        })
    }

    pub fn from_rationals(shape: Shape, masses: Vec<Rational>) -> Result<Self> {
        check_len(shape, masses.len())?;
        if masses.iter().any(|m| !rational::is_nonnegative(m)) {
            return Err(Error::invalid("negative mass"));
        }
        let total: Rational = masses.iter().cloned().fold(Rational::zero(), |a, b| a + b);
        if !total.is_one() {
            return Err(Error::invalid(format!(
                "masses sum to {}, not 1",
                rational::format_rational(&total)
            )));
        }
        let probs = masses.iter().map(rational::to_f64).collect();
        Ok(Self {
            shape,
            probs,
            exact: Some(Arc::new(masses)),
        })
    }

    pub fn joint(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        Self::from_floats(Shape::Joint { rows, cols }, probs)
    }

    pub fn marginal(probs: Vec<f64>) -> Result<Self> {
        Self::from_floats(Shape::Marginal(probs.len()), probs)
    }

    pub fn uniform(shape: Shape) -> Self {
        let n = shape.len();
        let masses = vec![Rational::new(1.into(), (n as i64).into()); n];
        Self::from_rationals(shape, masses).expect("uniform is a pmf")
    }

    /// Point mass at flat index `index`.
    pub fn point_mass(shape: Shape, index: usize) -> Result<Self> {
        if index >= shape.len() {
            return Err(Error::invalid(format!(
                "index {index} outside alphabet {shape}"
            )));
        }
        let masses = (0..shape.len())
            .map(|i| {
                if i == index {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        Self::from_rationals(shape, masses)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn backing(&self) -> Backing {
        if self.exact.is_some() {
            Backing::Rational
        } else {
            Backing::Float
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn exact(&self) -> Option<&[Rational]> {
        self.exact.as_deref().map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn rows(&self) -> usize {
        match self.shape {
            Shape::Joint { rows, .. } => rows,
            Shape::Marginal(m) => m,
        }
    }

    pub fn cols(&self) -> usize {
        match self.shape {
            Shape::Joint { cols, .. } => cols,
            Shape::Marginal(_) => 1,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.cols() + y]
    }

    pub fn require_joint(&self) -> Result<(usize, usize)> {
        match self.shape {
            Shape::Joint { rows, cols } => Ok((rows, cols)),
            Shape::Marginal(_) => Err(Error::invalid(format!(
                "expected a joint pmf, got shape {}",
                self.shape
            ))),
        }
    }

    pub fn require_marginal(&self) -> Result<usize> {
        match self.shape {
            Shape::Marginal(m) => Ok(m),
            Shape::Joint { .. } => Err(Error::invalid(format!(
                "expected a marginal pmf, got shape {}",
                self.shape
            ))),
        }
    }

    /// Drops the exact masses, keeping only the float view.
    pub fn to_float(&self) -> Self {
        Self {
            shape: self.shape,
            probs: self.probs.clone(),
            exact: None,
        }
    }

    /// Total-variation distance between float views.
    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        same_shape(self, other)?;
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

fn check_len(shape: Shape, len: usize) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::invalid("empty alphabet"));
    }
    if shape.len() != len {
        return Err(Error::invalid(format!(
            "shape {shape} needs {} masses, got {len}",
            shape.len()
        )));
    }
    Ok(())
}

pub(crate) fn same_shape(p: &FinitePmf, q: &FinitePmf) -> Result<()> {
    if p.shape != q.shape {
        return Err(Error::ShapeMismatch {
            left: p.shape.to_string(),
            right: q.shape.to_string(),
        });
    }
    Ok(())
}

pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Outer product `qx ⊗ qy` as a joint PMF. Exact when both inputs are.
pub fn product_pmf(qx: &FinitePmf, qy: &FinitePmf) -> Result<FinitePmf> {
    let rows = qx.require_marginal()?;
    let cols = qy.require_marginal()?;
    let shape = Shape::Joint { rows, cols };
    if let (Some(ex), Some(ey)) = (qx.exact(), qy.exact()) {
        let masses = ex
            .iter()
            .flat_map(|a| ey.iter().map(move |b| a * b))
            .collect();
        return FinitePmf::from_rationals(shape, masses);
    }
    let probs = qx
        .probs
        .iter()
        .flat_map(|a| qy.probs.iter().map(move |b| a * b))
        .collect();
    Ok(FinitePmf {
        shape,
        probs,
        exact: None,
    })
}

/// Row and column sums of a joint PMF.
pub fn marginals(r: &FinitePmf) -> Result<(FinitePmf, FinitePmf)> {
    let (rows, cols) = r.require_joint()?;
    if let Some(exact) = r.exact() {
        let mut mx = vec![Rational::zero(); rows];
        let mut my = vec![Rational::zero(); cols];
        for x in 0..rows {
            for y in 0..cols {
                let m = &exact[x * cols + y];
                mx[x] += m;
                my[y] += m;
            }
        }
        return Ok((
            FinitePmf::from_rationals(Shape::Marginal(rows), mx)?,
            FinitePmf::from_rationals(Shape::Marginal(cols), my)?,
        ));
    }
    let (mx, my) = marginal_vectors(&r.probs, rows, cols);
    Ok((
        FinitePmf {
            shape: Shape::Marginal(rows),
            probs: mx,
            exact: None,
        },
        FinitePmf {
            shape: Shape::Marginal(cols),
            probs: my,
            exact: None,
        },
    ))
}

pub(crate) fn marginal_vectors(probs: &[f64], rows: usize, cols: usize) -> (Vec<f64>, Vec<f64>) {
    let mx = (0..rows)
        .map(|x| neumaier_sum((0..cols).map(|y| probs[x * cols + y])))
        .collect();
    let my = (0..cols)
        .map(|y| neumaier_sum((0..rows).map(|x| probs[x * cols + y])))
        .collect();
    (mx, my)
}

/// Integer count matrix of a sample sequence (its type).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalType {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    n: u64,
}

impl EmpiricalType {
    pub fn from_counts(rows: usize, cols: usize, counts: Vec<u64>) -> Result<Self> {
        if rows * cols == 0 || counts.len() != rows * cols {
            return Err(Error::invalid("count matrix does not match its shape"));
        }
        let n = counts.iter().sum();
        if n == 0 {
            return Err(Error::invalid("empirical type needs at least one sample"));
        }
        Ok(Self {
            rows,
            cols,
            counts,
            n,
        })
    }

    /// Type of a sequence of zero-based `(x, y)` index pairs.
    pub fn from_samples(rows: usize, cols: usize, samples: &[(usize, usize)]) -> Result<Self> {
        let mut counts = vec![0u64; rows * cols];
        for &(x, y) in samples {
            if x >= rows || y >= cols {
                return Err(Error::invalid(format!(
                    "sample ({x}, {y}) outside a {rows}x{cols} alphabet"
                )));
            }
            counts[x * cols + y] += 1;
        }
        Self::from_counts(rows, cols, counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.counts[x * self.cols + y]
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn shape(&self) -> Shape {
        Shape::Joint {
            rows: self.rows,
            cols: self.cols,
        }
    }

    /// `counts / n` in floating point, without building a PMF.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// `counts / n` with exact rational masses.
    pub fn as_pmf(&self) -> FinitePmf {
        let n = num_bigint::BigInt::from(self.n);
        let masses = self
            .counts
            .iter()
            .map(|&c| Rational::new(c.into(), n.clone()))
            .collect();
        FinitePmf::from_rationals(self.shape(), masses).expect("counts sum to n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational;

    #[test]
    fn rejects_bad_masses() {
        assert!(FinitePmf::marginal(vec![0.5, 0.6]).is_err());
        assert!(FinitePmf::marginal(vec![-0.1, 1.1]).is_err());
        assert!(FinitePmf::marginal(vec![f64::NAN, 1.0]).is_err());
        assert!(FinitePmf::joint(2, 2, vec![1.0]).is_err());
        let thirds = vec![parse_rational("1/3").unwrap(); 3];
        assert!(FinitePmf::from_rationals(Shape::Marginal(3), thirds).is_ok());
        let off = vec![
            parse_rational("1/3").unwrap(),
            parse_rational("1/3").unwrap(),
            parse_rational("1/4").unwrap(),
        ];
        assert!(FinitePmf::from_rationals(Shape::Marginal(3), off).is_err());
    }

    #[test]
    fn product_of_point_masses() {
        let a = FinitePmf::point_mass(Shape::Marginal(3), 0).unwrap();
        let b = FinitePmf::point_mass(Shape::Marginal(3), 1).unwrap();
        let joint = product_pmf(&a, &b).unwrap();
        assert_eq!(joint.shape(), Shape::Joint { rows: 3, cols: 3 });
        assert_eq!(joint.get(0, 1), 1.0);
        assert_eq!(joint.probs().iter().sum::<f64>(), 1.0);
        let (mx, my) = marginals(&joint).unwrap();
        assert_eq!(mx, a);
        assert_eq!(my, b);
    }

    #[test]
    fn empirical_type_counts() {
        let t = EmpiricalType::from_samples(2, 2, &[(0, 0), (1, 1), (0, 0)]).unwrap();
        assert_eq!(t.n(), 3);
        assert_eq!(t.count(0, 0), 2);
        assert_eq!(t.count(1, 1), 1);
        assert_eq!(t.count(0, 1), 0);
        let pmf = t.as_pmf();
        assert_eq!(pmf.exact().unwrap()[0], parse_rational("2/3").unwrap());
        assert!(EmpiricalType::from_samples(2, 2, &[(2, 0)]).is_err());
        assert!(EmpiricalType::from_samples(2, 2, &[]).is_err());
    }
}
