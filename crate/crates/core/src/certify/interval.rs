//! Outward-rounded interval arithmetic over `f64`.
//!
//! Rust exposes no rounding-mode control, so every operation is computed in
//! round-to-nearest and then widened. Correctly rounded operations (`+ − × ÷`)
//! widen by one ulp unless an error-free transformation proves the result
//! exact; library transcendentals (`ln`, `exp`, `powf`) widen by
//! [`LIBM_ULPS`] ulps on each side.

use std::fmt;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Ulps of slack granted to each libm transcendental result.
pub const LIBM_ULPS: u32 = 2;

#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

pub type IntervalScalar = Interval;

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN is not an interval endpoint");
        Self { lo: x, hi: x }
    }

    pub fn from_rational(r: &Rational) -> Self {
        let (lo, hi) = rational::enclose(r);
        Self { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn hull(&self, other: &Self) -> Self {
        Self {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            lo: add_down(self.lo, o.lo),
            hi: add_up(self.hi, o.hi),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let cands = [
            (self.lo, o.lo),
            (self.lo, o.hi),
            (self.hi, o.lo),
            (self.hi, o.hi),
        ];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (a, b) in cands {
            lo = lo.min(mul_down(a, b));
            hi = hi.max(mul_up(a, b));
        }
        Self { lo, hi }
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        if o.contains_zero() {
            return Err(Error::Domain(format!(
                "division by {o:?}, which contains zero"
            )));
        }
        let cands = [
            (self.lo, o.lo),
            (self.lo, o.hi),
            (self.hi, o.lo),
            (self.hi, o.hi),
        ];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (a, b) in cands {
            lo = lo.min(div_down(a, b));
            hi = hi.max(div_up(a, b));
        }
        Ok(Self { lo, hi })
    }

    /// Natural log. A zero lower endpoint maps to `−∞`.
    pub fn ln(&self) -> Result<Self> {
        if self.lo < 0.0 {
            return Err(Error::Domain(format!(
                "log of {self:?}, which has negative members"
            )));
        }
        Ok(Self {
            lo: ln_down(self.lo),
            hi: ln_up(self.hi),
        })
    }

    pub fn exp(&self) -> Self {
        Self {
            lo: exp_down(self.lo),
            hi: exp_up(self.hi),
        }
    }

    /// `self^e` for a nonnegative base and a positive exponent.
    pub fn pow(&self, e: &Self) -> Result<Self> {
        if self.lo < 0.0 {
            return Err(Error::Domain(format!(
                "power of {self:?}, which has negative members"
            )));
        }
        if e.lo <= 0.0 {
            return Err(Error::Domain(format!("exponent {e:?} is not positive")));
        }
        // x^y is increasing in x for y > 0 and monotone in y on each side of x = 1.
        let lo = pow_down(self.lo, e.lo).min(pow_down(self.lo, e.hi));
        let hi = pow_up(self.hi, e.lo).max(pow_up(self.hi, e.hi));
        Ok(Self { lo, hi })
    }

    /// Smallest interval containing both endpoints' minima: `[min lo, min hi]`.
    pub fn min(&self, o: &Self) -> Self {
        Self {
            lo: self.lo.min(o.lo),
            hi: self.hi.min(o.hi),
        }
    }

    pub fn max(&self, o: &Self) -> Self {
        Self {
            lo: self.lo.max(o.lo),
            hi: self.hi.max(o.hi),
        }
    }
}

fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s.is_nan() { f64::NEG_INFINITY } else { s };
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s.is_nan() { f64::INFINITY } else { s };
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

/// Product with `0 × ∞ = 0` (an exact zero endpoint annihilates).
fn mul_exact_or(a: f64, b: f64) -> Option<f64> {
    if a == 0.0 || b == 0.0 {
        return Some(0.0);
    }
    let p = a * b;
    if p.is_infinite() && a.is_finite() && b.is_finite() {
        return None;
    }
    if !p.is_finite() {
        return Some(p);
    }
    if a.mul_add(b, -p) == 0.0 && p != 0.0 && p.is_normal() {
        return Some(p);
    }
    None
}

fn mul_down(a: f64, b: f64) -> f64 {
    match mul_exact_or(a, b) {
        Some(p) => p,
        None => {
            let p = a * b;
            if p.is_infinite() {
                return if p > 0.0 { f64::MAX } else { f64::NEG_INFINITY };
            }
            if p.is_normal() && a.mul_add(b, -p) > 0.0 {
                p
            } else {
                p.next_down()
            }
        }
    }
}

fn mul_up(a: f64, b: f64) -> f64 {
    match mul_exact_or(a, b) {
        Some(p) => p,
        None => {
            let p = a * b;
            if p.is_infinite() {
                return if p > 0.0 { f64::INFINITY } else { f64::MIN };
            }
            if p.is_normal() && a.mul_add(b, -p) < 0.0 {
                p
            } else {
                p.next_up()
            }
        }
    }
}

fn div_down(a: f64, b: f64) -> f64 {
    let q = a / b;
    if q.is_nan() {
        return f64::NEG_INFINITY;
    }
    if q.is_infinite() || a.is_infinite() || b.is_infinite() {
        return q;
    }
    if q == 0.0 && a == 0.0 {
        return 0.0;
    }
    // residual r = a − q·b; if b > 0, r < 0 means q is too large.
    let r = (-q).mul_add(b, a);
    if q.is_normal() && r == 0.0 {
        return q;
    }
    q.next_down()
}

fn div_up(a: f64, b: f64) -> f64 {
    let q = a / b;
    if q.is_nan() {
        return f64::INFINITY;
    }
    if q.is_infinite() || a.is_infinite() || b.is_infinite() {
        return q;
    }
    if q == 0.0 && a == 0.0 {
        return 0.0;
    }
    let r = (-q).mul_add(b, a);
    if q.is_normal() && r == 0.0 {
        return q;
    }
    q.next_up()
}

fn widen_down(x: f64, ulps: u32) -> f64 {
    (0..ulps).fold(x, |v, _| v.next_down())
}

fn widen_up(x: f64, ulps: u32) -> f64 {
    (0..ulps).fold(x, |v, _| v.next_up())
}

fn ln_down(x: f64) -> f64 {
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x == 1.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return f64::MAX;
    }
    widen_down(x.ln(), LIBM_ULPS)
}

fn ln_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::MIN;
    }
    if x == 1.0 {
        return 0.0;
    }
    widen_up(x.ln(), LIBM_ULPS)
}

fn exp_down(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    widen_down(x.exp(), LIBM_ULPS).max(0.0)
}

fn exp_up(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return f64::MIN_POSITIVE * f64::EPSILON;
    }
    widen_up(x.exp(), LIBM_ULPS)
}

fn pow_down(x: f64, y: f64) -> f64 {
    if x == 0.0 || x == 1.0 || y == 1.0 {
        return x;
    }
    widen_down(x.powf(y), LIBM_ULPS).max(0.0)
}

fn pow_up(x: f64, y: f64) -> f64 {
    if x == 0.0 || x == 1.0 || y == 1.0 {
        return x;
    }
    let v = x.powf(y);
    if v == 0.0 {
        return f64::MIN_POSITIVE * f64::EPSILON;
    }
    widen_up(v, LIBM_ULPS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn exact_cases_stay_points() {
        assert_eq!(
            Interval::point(1.0).add(&Interval::point(2.0)),
            Interval::point(3.0)
        );
        assert_eq!(Interval::point(1.0).ln().unwrap(), Interval::point(0.0));
        assert_eq!(Interval::point(0.0).exp(), Interval::point(1.0));
        assert_eq!(
            Interval::point(3.0).mul(&Interval::point(0.5)),
            Interval::point(1.5)
        );
        assert_eq!(
            Interval::point(3.0).div(&Interval::point(4.0)).unwrap(),
            Interval::point(0.75)
        );
    }

    #[test]
    fn inexact_results_are_widened() {
        let third = Interval::point(1.0).div(&Interval::point(3.0)).unwrap();
        assert!(third.lo() < third.hi());
        let s = Interval::point(0.1).add(&Interval::point(0.2));
        assert!(s.lo() < s.hi());
    }

    #[test]
    fn product_bounds() {
        let p = iv(1.0, 2.0).mul(&iv(3.0, 4.0));
        assert!(p.lo() <= 3.0 && p.hi() >= 8.0);
        let q = iv(-1.0, 2.0).mul(&iv(-3.0, 4.0));
        assert_eq!((q.lo(), q.hi()), (-6.0, 8.0));
    }

    #[test]
    fn domain_violations() {
        assert!(iv(1.0, 2.0).div(&iv(-1.0, 1.0)).is_err());
        assert!(iv(-1.0, 2.0).ln().is_err());
        assert_eq!(iv(0.0, 1.0).ln().unwrap().lo(), f64::NEG_INFINITY);
        assert!(iv(0.0, 1.0).pow(&iv(-0.5, 0.5)).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        let z = Interval::point(0.0);
        let inf = iv(f64::NEG_INFINITY, 0.0);
        assert_eq!(z.mul(&inf), Interval::point(0.0));
    }

    #[test]
    fn pow_of_zero_base() {
        let r = iv(0.0, 0.25).pow(&Interval::point(0.5)).unwrap();
        assert_eq!(r.lo(), 0.0);
        assert!(r.hi() >= 0.5);
    }
}
