//! Multi-precision intervals and the arithmetic interface shared with the
//! `f64` intervals, so bound evaluation can climb a precision ladder.

use std::cell::RefCell;
use std::fmt;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};

use super::interval::Interval;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Arithmetic over enclosures of real numbers. Every operation returns an
/// enclosure of the exact result for all members of its operands.
pub trait Enclosure: Clone + fmt::Debug {
    /// Enclosure of `r` at `bits` of precision (ignored by `f64` intervals).
    fn from_rational(r: &Rational, bits: usize) -> Self;
    /// An `f64` is always exactly representable.
    fn from_f64(x: f64, bits: usize) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Result<Self>;
    fn ln(&self) -> Result<Self>;
    fn exp(&self) -> Self;
    fn pow(&self, e: &Self) -> Result<Self>;
    /// Enclosure of `min(a, b)` over members.
    fn min(&self, o: &Self) -> Self;
    /// The point interval at the lower endpoint.
    fn lower_point(&self) -> Self;
    /// Outward-rounded `f64` view.
    fn to_f64_interval(&self) -> Interval;
    /// Exact lower endpoint, `None` when it is `−∞`.
    fn lo_rational(&self) -> Option<Rational>;
    /// Exact upper endpoint, `None` when it is `+∞`.
    fn hi_rational(&self) -> Option<Rational>;
    fn lo_is_neg_infinite(&self) -> bool;
    fn hi_is_pos_infinite(&self) -> bool;
}

impl Enclosure for Interval {
    fn from_rational(r: &Rational, _bits: usize) -> Self {
        Interval::from_rational(r)
    }
    fn from_f64(x: f64, _bits: usize) -> Self {
        Interval::point(x)
    }
    fn add(&self, o: &Self) -> Self {
        Interval::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Interval::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Interval::mul(self, o)
    }
    fn div(&self, o: &Self) -> Result<Self> {
        Interval::div(self, o)
    }
    fn ln(&self) -> Result<Self> {
        Interval::ln(self)
    }
    fn exp(&self) -> Self {
        Interval::exp(self)
    }
    fn pow(&self, e: &Self) -> Result<Self> {
        Interval::pow(self, e)
    }
    fn min(&self, o: &Self) -> Self {
        Interval::min(self, o)
    }
    fn lower_point(&self) -> Self {
        Interval::point(self.lo())
    }
    fn to_f64_interval(&self) -> Interval {
        *self
    }
    fn lo_rational(&self) -> Option<Rational> {
        self.lo()
            .is_finite()
            .then(|| crate::rational::from_f64_exact(self.lo()))
    }
    fn hi_rational(&self) -> Option<Rational> {
        self.hi()
            .is_finite()
            .then(|| crate::rational::from_f64_exact(self.hi()))
    }
    fn lo_is_neg_infinite(&self) -> bool {
        self.lo() == f64::NEG_INFINITY
    }
    fn hi_is_pos_infinite(&self) -> bool {
        self.hi() == f64::INFINITY
    }
}

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

/// Guard bits used when evaluating transcendentals; the result is then
/// widened by a relative `2^-bits` on each side.
const GUARD_BITS: usize = 64;

/// Interval with [`BigFloat`] endpoints at a fixed precision.
#[derive(Clone)]
pub struct MpInterval {
    lo: BigFloat,
    hi: BigFloat,
    bits: usize,
}

impl fmt::Debug for MpInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = self.to_f64_interval();
        write!(f, "Mp{}[{:e}, {:e}]", self.bits, i.lo(), i.hi())
    }
}

fn big_from_int(n: &BigInt, rm: RoundingMode, bits: usize) -> BigFloat {
    let exact_bits = (n.bits() as usize).max(1) + 64;
    let p = exact_bits.max(bits);
    let v = CONSTS.with(|c| {
        BigFloat::parse(
            &n.to_string(),
            Radix::Dec,
            p,
            RoundingMode::ToEven,
            &mut c.borrow_mut(),
        )
    });
    round_to(&v, bits, rm)
}

fn round_to(v: &BigFloat, bits: usize, rm: RoundingMode) -> BigFloat {
    let mut out = v.clone();
    if out.is_inf() || out.is_nan() || out.is_zero() {
        return out;
    }
    out.set_precision(bits, rm).expect("valid precision");
    out
}

fn bigfloat_to_rational(v: &BigFloat) -> Option<Rational> {
    if v.is_zero() {
        return Some(Rational::zero());
    }
    let (words, n, sign, e, _) = v.as_raw_parts()?;
    let digits: Vec<u32> = words
        .iter()
        .flat_map(|w| {
            let w = *w as u64;
            [w as u32, (w >> 32) as u32]
        })
        .collect();
    let mant = BigInt::from(BigUint::new(digits));
    let shift = e as i64 - n as i64;
    let mut r = if shift >= 0 {
        Rational::from_integer(mant << shift as usize)
    } else {
        Rational::new(mant, BigInt::from(1) << (-shift) as usize)
    };
    if sign == Sign::Neg {
        r = -r;
    }
    Some(r)
}

fn rational_to_f64_down(r: &Rational) -> f64 {
    crate::rational::enclose(r).0
}

fn rational_to_f64_up(r: &Rational) -> f64 {
    crate::rational::enclose(r).1
}

/// `v·(1 − 2^-bits)` or `v·(1 + 2^-bits)` rounded in the given direction, moving
/// `v` away from the true value by at least a relative `2^-bits`.
fn widen(v: &BigFloat, bits: usize, down: bool) -> BigFloat {
    if v.is_inf() || v.is_nan() || v.is_zero() {
        return v.clone();
    }
    let eps = {
        let one = BigFloat::from_f64(1.0, bits);
        let mut e = one.clone();
        e.set_exponent(1 - bits as i32);
        e
    };
    let delta = v.abs().mul(&eps, bits + GUARD_BITS, RoundingMode::Up);
    if down {
        v.sub(&delta, bits, RoundingMode::Down)
    } else {
        v.add(&delta, bits, RoundingMode::Up)
    }
}

impl MpInterval {
    pub fn bits(&self) -> usize {
        self.bits
    }

    fn make(lo: BigFloat, hi: BigFloat, bits: usize) -> Self {
        debug_assert!(!lo.is_nan() && !hi.is_nan());
        Self { lo, hi, bits }
    }

    fn transcendental(
        &self,
        f: impl Fn(&BigFloat, usize, RoundingMode, &mut Consts) -> BigFloat,
    ) -> (BigFloat, BigFloat) {
        let p = self.bits + GUARD_BITS;
        CONSTS.with(|c| {
            let mut cc = c.borrow_mut();
            let lo = f(&self.lo, p, RoundingMode::Down, &mut cc);
            let hi = f(&self.hi, p, RoundingMode::Up, &mut cc);
            (widen(&lo, self.bits, true), widen(&hi, self.bits, false))
        })
    }

    fn is_neg_point_free(&self) -> bool {
        !self.lo.is_negative() || self.lo.is_zero()
    }
}

fn min_big(a: BigFloat, b: BigFloat) -> BigFloat {
    if a.cmp(&b).unwrap_or(0) <= 0 {
        a
    } else {
        b
    }
}

fn max_big(a: BigFloat, b: BigFloat) -> BigFloat {
    if a.cmp(&b).unwrap_or(0) >= 0 {
        a
    } else {
        b
    }
}

fn mul_rm(a: &BigFloat, b: &BigFloat, bits: usize, rm: RoundingMode) -> BigFloat {
    if a.is_zero() || b.is_zero() {
        return BigFloat::from_f64(0.0, bits);
    }
    a.mul(b, bits, rm)
}

impl Enclosure for MpInterval {
    fn from_rational(r: &Rational, bits: usize) -> Self {
        let neg = r.is_negative();
        let num = r.numer().abs();
        let den = r.denom().clone();
        let (lo, hi) = if num.is_zero() {
            (BigFloat::from_f64(0.0, bits), BigFloat::from_f64(0.0, bits))
        } else {
            let n_lo = big_from_int(&num, RoundingMode::Down, bits + GUARD_BITS);
            let n_hi = big_from_int(&num, RoundingMode::Up, bits + GUARD_BITS);
            let d_lo = big_from_int(&den, RoundingMode::Down, bits + GUARD_BITS);
            let d_hi = big_from_int(&den, RoundingMode::Up, bits + GUARD_BITS);
            (
                n_lo.div(&d_hi, bits, RoundingMode::Down),
                n_hi.div(&d_lo, bits, RoundingMode::Up),
            )
        };
        if neg {
            Self::make(hi.neg(), lo.neg(), bits)
        } else {
            Self::make(lo, hi, bits)
        }
    }

    fn from_f64(x: f64, bits: usize) -> Self {
        let v = BigFloat::from_f64(x, bits.max(64));
        Self::make(v.clone(), v, bits)
    }

    fn add(&self, o: &Self) -> Self {
        let bits = self.bits.max(o.bits);
        Self::make(
            self.lo.add(&o.lo, bits, RoundingMode::Down),
            self.hi.add(&o.hi, bits, RoundingMode::Up),
            bits,
        )
    }

    fn sub(&self, o: &Self) -> Self {
        let bits = self.bits.max(o.bits);
        Self::make(
            self.lo.sub(&o.hi, bits, RoundingMode::Down),
            self.hi.sub(&o.lo, bits, RoundingMode::Up),
            bits,
        )
    }

    fn mul(&self, o: &Self) -> Self {
        let bits = self.bits.max(o.bits);
        let pairs = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let mut lo: Option<BigFloat> = None;
        let mut hi: Option<BigFloat> = None;
        for (a, b) in pairs {
            let d = mul_rm(a, b, bits, RoundingMode::Down);
            let u = mul_rm(a, b, bits, RoundingMode::Up);
            lo = Some(match lo {
                None => d,
                Some(l) => min_big(l, d),
            });
            hi = Some(match hi {
                None => u,
                Some(h) => max_big(h, u),
            });
        }
        Self::make(lo.unwrap(), hi.unwrap(), bits)
    }

    fn div(&self, o: &Self) -> Result<Self> {
        let bits = self.bits.max(o.bits);
        let zero = BigFloat::from_f64(0.0, bits);
        if o.lo.cmp(&zero).unwrap_or(0) <= 0 && o.hi.cmp(&zero).unwrap_or(0) >= 0 {
            return Err(Error::Domain(format!(
                "division by {o:?}, which contains zero"
            )));
        }
        let pairs = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let mut lo: Option<BigFloat> = None;
        let mut hi: Option<BigFloat> = None;
        for (a, b) in pairs {
            let d = a.div(b, bits, RoundingMode::Down);
            let u = a.div(b, bits, RoundingMode::Up);
            lo = Some(match lo {
                None => d,
                Some(l) => min_big(l, d),
            });
            hi = Some(match hi {
                None => u,
                Some(h) => max_big(h, u),
            });
        }
        Ok(Self::make(lo.unwrap(), hi.unwrap(), bits))
    }

    fn ln(&self) -> Result<Self> {
        if !self.is_neg_point_free() {
            return Err(Error::Domain(format!(
                "log of {self:?}, which has negative members"
            )));
        }
        let lo_zero = self.lo.is_zero();
        let hi_zero = self.hi.is_zero();
        let (lo, hi) = self.transcendental(|v, p, rm, cc| {
            if v.is_zero() {
                astro_float::INF_NEG
            } else {
                v.ln(p, rm, cc)
            }
        });
        let lo = if lo_zero { astro_float::INF_NEG } else { lo };
        let hi = if hi_zero { astro_float::INF_NEG } else { hi };
        Ok(Self::make(lo, hi, self.bits))
    }

    fn exp(&self) -> Self {
        let (lo, hi) = self.transcendental(|v, p, rm, cc| {
            if v.is_inf_neg() {
                BigFloat::from_f64(0.0, p)
            } else {
                v.exp(p, rm, cc)
            }
        });
        let zero = BigFloat::from_f64(0.0, self.bits);
        let lo = if lo.is_negative() { zero } else { lo };
        Self::make(lo, hi, self.bits)
    }

    fn pow(&self, e: &Self) -> Result<Self> {
        if !self.is_neg_point_free() {
            return Err(Error::Domain(format!(
                "power of {self:?}, which has negative members"
            )));
        }
        if e.lo.is_negative() || e.lo.is_zero() {
            return Err(Error::Domain(format!("exponent {e:?} is not positive")));
        }
        let bits = self.bits.max(e.bits);
        let p = bits + GUARD_BITS;
        // x^y = exp(y ln x), monotone as in the f64 case; x = 0 maps to 0.
        let one_pow = |x: &BigFloat, y: &BigFloat, down: bool| -> BigFloat {
            if x.is_zero() {
                return BigFloat::from_f64(0.0, bits);
            }
            let rm = if down {
                RoundingMode::Down
            } else {
                RoundingMode::Up
            };
            let v = CONSTS.with(|c| x.pow(y, p, rm, &mut c.borrow_mut()));
            let w = widen(&v, bits, down);
            if down && w.is_negative() {
                BigFloat::from_f64(0.0, bits)
            } else {
                w
            }
        };
        let lo = min_big(
            one_pow(&self.lo, &e.lo, true),
            one_pow(&self.lo, &e.hi, true),
        );
        let hi = max_big(
            one_pow(&self.hi, &e.lo, false),
            one_pow(&self.hi, &e.hi, false),
        );
        Ok(Self::make(lo, hi, bits))
    }

    fn min(&self, o: &Self) -> Self {
        let bits = self.bits.max(o.bits);
        Self::make(
            min_big(self.lo.clone(), o.lo.clone()),
            min_big(self.hi.clone(), o.hi.clone()),
            bits,
        )
    }

    fn lower_point(&self) -> Self {
        Self::make(self.lo.clone(), self.lo.clone(), self.bits)
    }

    fn to_f64_interval(&self) -> Interval {
        let lo = if self.lo.is_inf_neg() {
            f64::NEG_INFINITY
        } else if self.lo.is_inf_pos() {
            f64::MAX
        } else {
            rational_to_f64_down(&bigfloat_to_rational(&self.lo).expect("finite"))
        };
        let hi = if self.hi.is_inf_pos() {
            f64::INFINITY
        } else if self.hi.is_inf_neg() {
            f64::MIN
        } else {
            rational_to_f64_up(&bigfloat_to_rational(&self.hi).expect("finite"))
        };
        Interval::new(lo, hi).expect("ordered endpoints")
    }

    fn lo_rational(&self) -> Option<Rational> {
        if self.lo.is_inf() {
            None
        } else {
            bigfloat_to_rational(&self.lo)
        }
    }

    fn hi_rational(&self) -> Option<Rational> {
        if self.hi.is_inf() {
            None
        } else {
            bigfloat_to_rational(&self.hi)
        }
    }

    fn lo_is_neg_infinite(&self) -> bool {
        self.lo.is_inf_neg()
    }

    fn hi_is_pos_infinite(&self) -> bool {
        self.hi.is_inf_pos()
    }
}
