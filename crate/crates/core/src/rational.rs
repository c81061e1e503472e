//! Exact rational helpers: parsing `a/b` and decimal strings, exact
//! conversion of binary floats, and outward-rounded float enclosures.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Parses `"a/b"`, an integer, or a terminating decimal (optionally with an
/// exponent, e.g. `1.5e-3`) into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::invalid("empty number"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad numerator in `{s}`")))?;
        let den: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad denominator in `{s}`")))?;
        if den.is_zero() {
            return Err(Error::invalid(format!("zero denominator in `{s}`")));
        }
        return Ok(BigRational::new(num, den));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Result<Rational> {
    let bad = || Error::invalid(format!("not a number: `{s}`"));
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| bad())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut num: BigInt = if all.is_empty() {
        BigInt::zero()
    } else {
        all.parse().map_err(|_| bad())?
    };
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Formats as `a/b`, or `a` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact rational value of a finite float.
pub fn from_f64_exact(x: f64) -> Rational {
    BigRational::from_float(x).expect("finite float")
}

/// Float view of `r`, for reporting and heuristics only.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Tightest pair of floats `(lo, hi)` with `lo <= r <= hi`.
pub fn enclose(r: &Rational) -> (f64, f64) {
    let approx = to_f64(r);
    if !approx.is_finite() {
        return if r.is_negative() {
            (f64::NEG_INFINITY, approx.next_up())
        } else {
            (approx.next_down(), f64::INFINITY)
        };
    }
    let exact = from_f64_exact(approx);
    match exact.cmp(r) {
        std::cmp::Ordering::Equal => (approx, approx),
        std::cmp::Ordering::Less => (approx, approx.next_up()),
        std::cmp::Ordering::Greater => (approx.next_down(), approx),
    }
}

/// `num / 2^shift` as an exact rational.
pub fn dyadic(num: i64, shift: u32) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::one() << shift)
}

pub fn is_nonnegative(r: &Rational) -> bool {
    r.numer().sign() != Sign::Minus
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/4").unwrap(), dyadic(3, 2));
        assert_eq!(parse_rational("0.75").unwrap(), dyadic(3, 2));
        assert_eq!(parse_rational("-1.5e1").unwrap(), dyadic(-15, 0));
        assert_eq!(parse_rational("7").unwrap(), dyadic(7, 0));
        assert_eq!(
            parse_rational("0.1").unwrap(),
            BigRational::new(1.into(), 10.into())
        );
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn enclosure_brackets_non_dyadic() {
        let tenth = parse_rational("1/10").unwrap();
        let (lo, hi) = enclose(&tenth);
        assert!(lo < hi);
        assert!(from_f64_exact(lo) <= tenth && tenth <= from_f64_exact(hi));
        let half = dyadic(1, 1);
        assert_eq!(enclose(&half), (0.5, 0.5));
    }

    #[test]
    fn format_round_trip() {
        for s in ["1/3", "-22/7", "5"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
    }
}
