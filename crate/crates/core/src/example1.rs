//! The 3×3 joint distribution with a near-zero diagonal whose `E_P(·)` is not
//! convex, together with the exponent values and bounds that witness it.

use num_bigint::BigInt;
use num_traits::One;

use crate::distributions::{FinitePmf, Shape};
use crate::rational::Rational;

/// Diagonal mass.
pub fn diagonal() -> Rational {
    Rational::new(1.into(), 10_000.into())
}

/// Off-diagonal mass `γ = 9997/60000`.
pub fn gamma() -> Rational {
    Rational::new(9997.into(), 60_000.into())
}

pub fn pmf() -> FinitePmf {
    let (d, g) = (diagonal(), gamma());
    let masses = (0..9)
        .map(|i| if i / 3 == i % 3 { d.clone() } else { g.clone() })
        .collect();
    FinitePmf::from_rationals(Shape::Joint { rows: 3, cols: 3 }, masses).expect("valid pmf")
}

fn over_pow2(num: u64, shift: u32) -> Rational {
    Rational::new(BigInt::from(num), BigInt::one() << shift)
}

/// First exponent `3898 / 2^17`.
pub fn eq_low() -> Rational {
    over_pow2(3898, 17)
}

/// Second exponent `3984 / 2^17`.
pub fn eq_high() -> Rational {
    over_pow2(3984, 17)
}

/// Midpoint `3941 / 2^17`.
pub fn eq_mid() -> Rational {
    over_pow2(3941, 17)
}

/// Upper bound on `E_P(3898 / 2^17)`.
pub fn claim_low() -> Rational {
    over_pow2(58_593_464_420_737_815, 56)
}

/// Upper bound on `E_P(3984 / 2^17)`.
pub fn claim_high() -> Rational {
    over_pow2(58_382_556_630_811_219, 56)
}

/// Lower bound on `E_P(3941 / 2^17)`.
pub fn target_mid() -> Rational {
    over_pow2(58_488_010_525_784_883, 56)
}

/// Guaranteed non-convexity gap `10366 / 2^56`.
pub fn gap() -> Rational {
    over_pow2(10_366, 56)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::marginals;
    use num_traits::Zero;

    #[test]
    fn marginals_are_uniform() {
        let (mx, my) = marginals(&pmf()).unwrap();
        let third = Rational::new(1.into(), 3.into());
        assert!(mx.exact().unwrap().iter().all(|m| *m == third));
        assert!(my.exact().unwrap().iter().all(|m| *m == third));
    }

    #[test]
    fn gap_is_exact_difference() {
        let two = Rational::from_integer(2.into());
        let chord = (claim_low() + claim_high()) / &two;
        assert_eq!(target_mid() - chord, gap());
        assert_eq!((eq_low() + eq_high()) / two, eq_mid());
        assert!(!gap().is_zero());
    }
}
