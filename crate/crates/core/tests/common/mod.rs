//! Reference computations for tests, written directly against `astro-float`
//! and plain `f64` loops rather than the library.

#![allow(dead_code)]

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use rand::Rng;

pub const PREC: usize = 320;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct Oracle {
    cc: Consts,
}

impl Default for Oracle {
    fn default() -> Self {
        Self {
            cc: Consts::new().expect("constants"),
        }
    }
}

impl Oracle {
    pub fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, PREC)
    }

    pub fn ln(&mut self, x: &BigFloat) -> BigFloat {
        x.ln(PREC, RM, &mut self.cc)
    }

    pub fn exp(&mut self, x: &BigFloat) -> BigFloat {
        x.exp(PREC, RM, &mut self.cc)
    }

    /// `x^y` for `x > 0`.
    pub fn pow(&mut self, x: &BigFloat, y: &BigFloat) -> BigFloat {
        let l = self.ln(x);
        self.exp(&l.mul(y, PREC, RM))
    }

    /// `n / d` for decimal integer strings; exact when `d` is a power of two
    /// and `n` fits the working precision.
    pub fn ratio(&mut self, n: &str, d: &str) -> BigFloat {
        let n = BigFloat::parse(n, Radix::Dec, 4 * PREC, RM, &mut self.cc);
        let d = BigFloat::parse(d, Radix::Dec, 4 * PREC, RM, &mut self.cc);
        n.div(&d, PREC, RM)
    }

    pub fn to_f64(&mut self, x: &BigFloat) -> f64 {
        if x.is_inf_pos() {
            return f64::INFINITY;
        }
        if x.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        x.format(Radix::Dec, RM, &mut self.cc)
            .expect("format")
            .parse()
            .expect("decimal")
    }

    /// `Σ p ln(p/q)` with `0 ln 0 = 0` and `p ln(p/0) = ∞`.
    pub fn kl(&mut self, p: &[f64], q: &[f64]) -> f64 {
        let mut acc = BigFloat::from_f64(0.0, PREC);
        for (&a, &b) in p.iter().zip(q) {
            if a == 0.0 {
                continue;
            }
            if b == 0.0 {
                return f64::INFINITY;
            }
            let r = self.num(a).div(&self.num(b), PREC, RM);
            let t = self.num(a).mul(&self.ln(&r), PREC, RM);
            acc = acc.add(&t, PREC, RM);
        }
        self.to_f64(&acc)
    }

    /// `ln(Σ p^α q^{1−α}) / (α − 1)` over the cells where both terms are
    /// defined, and KL at `α = 1`; infinite when the sum vanishes, or for `α > 1` when `p`
    /// charges a cell `q` does not.
    pub fn renyi(&mut self, p: &[f64], q: &[f64], alpha: f64) -> f64 {
        if alpha == 1.0 {
            return self.kl(p, q);
        }
        if alpha > 1.0 && p.iter().zip(q).any(|(&a, &b)| a > 0.0 && b == 0.0) {
            return f64::INFINITY;
        }
        let a = self.num(alpha);
        let b = self.num(1.0 - alpha);
        let mut s = BigFloat::from_f64(0.0, PREC);
        for (&x, &y) in p.iter().zip(q) {
            if x == 0.0 || y == 0.0 {
                continue;
            }
            let t = self
                .pow(&self.num(x), &a)
                .mul(&self.pow(&self.num(y), &b), PREC, RM);
            s = s.add(&t, PREC, RM);
        }
        if s.is_zero() {
            return f64::INFINITY;
        }
        let l = self.ln(&s);
        let d = self.num(alpha - 1.0);
        self.to_f64(&l.div(&d, PREC, RM))
    }
}

/// Marginals of a row-major joint.
pub fn marginals(r: &[f64], rows: usize, cols: usize) -> (Vec<f64>, Vec<f64>) {
    let mx = (0..rows)
        .map(|x| (0..cols).map(|y| r[x * cols + y]).sum())
        .collect();
    let my = (0..cols)
        .map(|y| (0..rows).map(|x| r[x * cols + y]).sum())
        .collect();
    (mx, my)
}

pub fn kl_f64(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a == 0.0 {
                0.0
            } else if b == 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).ln()
            }
        })
        .sum()
}

pub fn mi_f64(r: &[f64], rows: usize, cols: usize) -> f64 {
    let (mx, my) = marginals(r, rows, cols);
    let prod: Vec<f64> = (0..rows * cols)
        .map(|k| mx[k / cols] * my[k % cols])
        .collect();
    kl_f64(r, &prod)
}

/// Dirichlet(1, …, 1) sample.
pub fn simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// A simplex point with each entry zeroed with probability `zero_prob`
/// (at least one entry survives).
pub fn sparse_simplex(rng: &mut impl Rng, n: usize, zero_prob: f64) -> Vec<f64> {
    let mut v = simplex(rng, n);
    let keep = rng.gen_range(0..n);
    for (i, x) in v.iter_mut().enumerate() {
        if i != keep && rng.gen_bool(zero_prob) {
            *x = 0.0;
        }
    }
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}
