use serde::{Deserialize, Serialize};

use super::{marginal_vectors, neumaier_sum, same_shape, FinitePmf};
use crate::error::{Error, Result};

/// Order of a Rényi divergence. `One` is the Kullback-Leibler limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RenyiOrder {
    One,
    Alpha(f64),
}

impl RenyiOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!(
                "Rényi order must be positive, got {alpha}"
            )));
        }
        Ok(if alpha == 1.0 {
            RenyiOrder::One
        } else {
            RenyiOrder::Alpha(alpha)
        })
    }

    pub fn value(&self) -> f64 {
        match *self {
            RenyiOrder::One => 1.0,
            RenyiOrder::Alpha(a) => a,
        }
    }
}

/// `Σ p log(p/q)` with `0 log(0/q) = 0` and `p log(p/0) = +∞`.
pub fn kl_divergence(p: &FinitePmf, q: &FinitePmf) -> Result<f64> {
    same_shape(p, q)?;
    Ok(kl_slices(p.probs(), q.probs()))
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut terms = Vec::with_capacity(p.len());
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return f64::INFINITY;
        }
        terms.push(pi * (pi / qi).ln());
    }
    neumaier_sum(terms).max(0.0)
}

/// `(1/(α−1)) log Σ p^α q^{1−α}` under the usual conventions; `One`
/// delegates to [`kl_divergence`].
///
/// The sum is evaluated as `1 + Σ p·expm1((1−α) log(q/p)) + (Σp − 1)` so that
/// orders close to one do not lose the divergence to cancellation.
pub fn renyi_divergence(p: &FinitePmf, q: &FinitePmf, order: RenyiOrder) -> Result<f64> {
    same_shape(p, q)?;
    match order {
        RenyiOrder::One => Ok(kl_slices(p.probs(), q.probs())),
        RenyiOrder::Alpha(alpha) => {
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(Error::invalid(format!(
                    "Rényi order must be positive, got {alpha}"
                )));
            }
            Ok(renyi_slices(p.probs(), q.probs(), alpha))
        }
    }
}

pub(crate) fn renyi_slices(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    if alpha == 1.0 {
        return kl_slices(p, q);
    }
    let t = 1.0 - alpha;
    let mut terms = Vec::with_capacity(2 * p.len() + 1);
    terms.push(-1.0);
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        terms.push(pi);
        if qi == 0.0 {
            if alpha > 1.0 {
                return f64::INFINITY;
            }
            // p^α 0^{1−α} = 0: the term is p·(0 − 1).
            terms.push(-pi);
            continue;
        }
        let e = (t * (qi / pi).ln()).exp_m1();
        if e.is_infinite() {
            return f64::INFINITY;
        }
        terms.push(pi * e);
    }
    let s_minus_one = neumaier_sum(terms);
    if s_minus_one <= -1.0 {
        // log 0 = −∞ and 1/(α−1) < 0 for α < 1.
        return f64::INFINITY;
    }
    let d = s_minus_one.ln_1p() / (alpha - 1.0);
    // Rounding can produce −0 or a tiny negative for identical inputs.
    d.max(0.0)
}

/// `D(r ‖ r_X r_Y)`; always finite and nonnegative.
pub fn mutual_information(r: &FinitePmf) -> Result<f64> {
    let (rows, cols) = r.require_joint()?;
    Ok(mi_slice(r.probs(), rows, cols))
}

pub(crate) fn mi_slice(r: &[f64], rows: usize, cols: usize) -> f64 {
    let (mx, my) = marginal_vectors(r, rows, cols);
    let mut terms = Vec::with_capacity(r.len());
    for x in 0..rows {
        for y in 0..cols {
            let v = r[x * cols + y];
            if v > 0.0 {
                terms.push(v * (v / (mx[x] * my[y])).ln());
            }
        }
    }
    neumaier_sum(terms).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{marginals, product_pmf};

    fn m(v: &[f64]) -> FinitePmf {
        FinitePmf::marginal(v.to_vec()).unwrap()
    }

    #[test]
    fn kl_conventions() {
        assert_eq!(
            kl_divergence(&m(&[0.3, 0.7]), &m(&[0.3, 0.7])).unwrap(),
            0.0
        );
        assert_eq!(
            kl_divergence(&m(&[1.0, 0.0]), &m(&[0.0, 1.0])).unwrap(),
            f64::INFINITY
        );
        // 0 log(0/0) = 0
        assert_eq!(
            kl_divergence(&m(&[1.0, 0.0]), &m(&[1.0, 0.0])).unwrap(),
            0.0
        );
        assert!(kl_divergence(&m(&[1.0]), &m(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn kl_half_quarter() {
        // 0.5 ln 2 + 0.5 ln(2/3), summed term by term in 50-digit arithmetic.
        let expected = 0.143_841_036_225_890_46;
        let got = kl_divergence(&m(&[0.5, 0.5]), &m(&[0.25, 0.75])).unwrap();
        assert!((got - expected).abs() < 1e-14, "{got}");
    }

    #[test]
    fn renyi_conventions() {
        let p = m(&[1.0, 0.0]);
        let q = m(&[0.5, 0.5]);
        let half = RenyiOrder::new(0.5).unwrap();
        let d = renyi_divergence(&p, &q, half).unwrap();
        assert!((d - 2f64.ln()).abs() < 1e-15);
        // disjoint supports: log 0 = −∞ for α < 1
        let r = m(&[0.0, 1.0]);
        assert_eq!(renyi_divergence(&p, &r, half).unwrap(), f64::INFINITY);
        // p/0 = +∞ for α > 1, 0/0 = 0
        let two = RenyiOrder::new(2.0).unwrap();
        assert_eq!(renyi_divergence(&q, &p, two).unwrap(), f64::INFINITY);
        assert!((renyi_divergence(&p, &q, two).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(renyi_divergence(&q, &q, two).unwrap(), 0.0);
        assert!(RenyiOrder::new(0.0).is_err());
        assert_eq!(RenyiOrder::new(1.0).unwrap(), RenyiOrder::One);
    }

    #[test]
    fn mi_of_correlated_bits() {
        let r = FinitePmf::joint(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((mutual_information(&r).unwrap() - 2f64.ln()).abs() < 1e-15);
        let prod = product_pmf(&m(&[0.2, 0.8]), &m(&[0.6, 0.4])).unwrap();
        assert!(mutual_information(&prod).unwrap() < 1e-15);
        let (a, b) = marginals(&prod).unwrap();
        assert!((a.probs()[0] - 0.2).abs() < 1e-15 && (b.probs()[1] - 0.4).abs() < 1e-15);
    }
}
