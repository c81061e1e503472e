//! Upper bounds on `E_P(e_q)` from explicit rational witnesses, and the
//! composite non-convexity certificate.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::certificate::{LowerCertificate, NonconvexityCertificate, UpperCertificate};
use super::mp::{Enclosure, MpInterval};
use crate::distributions::{FinitePmf, Shape};
use crate::error::{Error, Result};
use crate::exponents::ep_of_eq;
use crate::rational::{from_f64_exact, to_f64, Rational};

/// Precision used to build witnesses before rounding them to rationals.
const WITNESS_BITS: usize = 256;
/// Witness masses are multiples of `2^-WITNESS_DENOM_BITS`.
const WITNESS_DENOM_BITS: u32 = 128;
/// Tilt exponents are searched on a `2^-ALPHA_SEARCH_BITS` grid.
const ALPHA_SEARCH_BITS: u32 = 80;

fn exact(pmf: &FinitePmf, what: &str) -> Result<Vec<Rational>> {
    pmf.exact()
        .map(<[Rational]>::to_vec)
        .ok_or_else(|| Error::Precondition(format!("{what} must have rational masses")))
}

/// `Σ_z a(z) ln(a(z)/b(z))` as an enclosure; `None` when some `a(z) > 0`
/// meets `b(z) = 0`.
fn relative_entropy(a: &[Rational], b: &[Rational], bits: usize) -> Result<Option<MpInterval>> {
    let mut total = MpInterval::from_f64(0.0, bits);
    for (x, y) in a.iter().zip(b) {
        if x.is_zero() {
            continue;
        }
        if y.is_zero() {
            return Ok(None);
        }
        let ratio = MpInterval::from_rational(&(x / y), bits);
        let term = MpInterval::from_rational(x, bits).mul(&ratio.ln()?);
        total = total.add(&term);
    }
    Ok(Some(total))
}

fn product_of_marginals(r: &[Rational], rows: usize, cols: usize) -> Vec<Rational> {
    let mx: Vec<Rational> = (0..rows)
        .map(|i| r[i * cols..(i + 1) * cols].iter().sum())
        .collect();
    let my: Vec<Rational> = (0..cols)
        .map(|j| (0..rows).map(|i| &r[i * cols + j]).sum())
        .collect();
    (0..rows * cols)
        .map(|k| &mx[k / cols] * &my[k % cols])
        .collect()
}

fn hi_of(v: &MpInterval) -> Option<Rational> {
    v.hi_rational()
}

/// Checks `I(r) ≤ e_q` and `D(r‖p) ≤ claim` on interval enclosures computed
/// from the exact masses. Success means `E_P(e_q) ≤ claim`.
pub fn verify_upper_bound(
    p: &FinitePmf,
    r: &FinitePmf,
    e_q: &Rational,
    claim: &Rational,
    bits: u32,
) -> Result<UpperCertificate> {
    let (rows, cols) = p.require_joint()?;
    if r.shape() != p.shape() {
        return Err(Error::ShapeMismatch {
            left: r.shape().to_string(),
            right: p.shape().to_string(),
        });
    }
    let pe = exact(p, "p")?;
    let re = exact(r, "witness")?;
    let prec = bits.max(64) as usize;
    let mi = relative_entropy(&re, &product_of_marginals(&re, rows, cols), prec)?
        .expect("a joint is absolutely continuous w.r.t. its marginal product");
    let mi_hi = hi_of(&mi).ok_or_else(|| Error::Domain("I(r) enclosure is unbounded".into()))?;
    if mi_hi > *e_q {
        return Err(Error::Precondition(format!(
            "witness dependence I(r) ≤ {:.17e} is not certified below e_q = {:.17e}",
            to_f64(&mi_hi),
            to_f64(e_q)
        )));
    }
    let d = relative_entropy(&re, &pe, prec)?
        .ok_or_else(|| Error::Precondition("witness puts mass outside supp p".into()))?;
    let d_hi = hi_of(&d).ok_or_else(|| Error::Domain("D(r‖p) enclosure is unbounded".into()))?;
    if d_hi > *claim {
        return Err(Error::Precondition(format!(
            "D(r‖p) ≤ {:.17e} does not certify the claim {:.17e}",
            to_f64(&d_hi),
            to_f64(claim)
        )));
    }
    Ok(UpperCertificate {
        p: p.clone(),
        r: r.clone(),
        e_q: e_q.clone(),
        value: claim.clone(),
        bits,
    })
}

/// Re-runs [`verify_upper_bound`] on a stored certificate.
pub fn check_upper(c: &UpperCertificate) -> Result<()> {
    verify_upper_bound(&c.p, &c.r, &c.e_q, &c.value, c.bits).map(|_| ())
}

/// Unnormalized tilt `P^α Q^{1−α}` normalized and rounded to dyadic masses
/// with denominator `2^WITNESS_DENOM_BITS` that sum to one exactly.
fn rounded_tilt(p: &[Rational], q: &[Rational], alpha: &Rational) -> Result<Vec<Rational>> {
    let bits = WITNESS_BITS;
    let a = MpInterval::from_rational(alpha, bits);
    let b = MpInterval::from_rational(&(Rational::one() - alpha), bits);
    let mut weights = Vec::with_capacity(p.len());
    for (x, y) in p.iter().zip(q) {
        if x.is_zero() || y.is_zero() {
            weights.push(None);
            continue;
        }
        let px = if alpha.is_zero() {
            MpInterval::from_f64(1.0, bits)
        } else {
            MpInterval::from_rational(x, bits).pow(&a)?
        };
        let qy = MpInterval::from_rational(y, bits).pow(&b)?;
        weights.push(Some(px.mul(&qy)));
    }
    let mut total = MpInterval::from_f64(0.0, bits);
    for w in weights.iter().flatten() {
        total = total.add(w);
    }
    let scale = BigInt::one() << WITNESS_DENOM_BITS;
    let mut nums: Vec<BigInt> = weights
        .iter()
        .map(|w| match w {
            None => Ok(BigInt::zero()),
            Some(w) => {
                let v = w.div(&total)?;
                let mid = (v.lo_rational().unwrap_or_else(Rational::zero)
                    + v.hi_rational().unwrap_or_else(Rational::zero))
                    / Rational::from_integer(2.into());
                Ok((mid * Rational::from_integer(scale.clone()))
                    .floor()
                    .to_integer())
            }
        })
        .collect::<Result<_>>()?;
    let deficit = &scale - nums.iter().sum::<BigInt>();
    let largest = (0..nums.len())
        .max_by(|&i, &j| nums[i].cmp(&nums[j]))
        .unwrap_or(0);
    nums[largest] += deficit;
    if nums.iter().any(Signed::is_negative) {
        return Err(Error::Domain(
            "witness rounding produced a negative mass".into(),
        ));
    }
    Ok(nums
        .into_iter()
        .map(|n| Rational::new(n, scale.clone()))
        .collect())
}

/// A rational `R` with `I(R) ≤ e_q` and `D(R‖P)` close to `E_P(e_q)`.
///
/// The product `Q` minimizing the tilted objective is found by local search;
/// `R` is the tilt of `P` towards `Q` at the largest grid `α` whose
/// `D(R‖Q)` is certified below `e_q`, which forces `I(R) ≤ e_q`.
pub fn upper_witness(p: &FinitePmf, e_q: &Rational, starts: usize) -> Result<FinitePmf> {
    let (rows, cols) = p.require_joint()?;
    let pe = exact(p, "p")?;
    if e_q.is_negative() {
        return Err(Error::Precondition(
            "no distribution has negative dependence".into(),
        ));
    }
    let est = ep_of_eq(&p.to_float(), to_f64(e_q), starts)?;
    let Some((qx, qy)) = est.product else {
        // The constraint is inactive and P itself is optimal.
        return Ok(p.clone());
    };
    let normalized = |v: &[f64]| -> Vec<Rational> {
        let v: Vec<Rational> = v.iter().map(|&x| from_f64_exact(x.max(0.0))).collect();
        let total: Rational = v.iter().sum();
        v.into_iter().map(|x| x / &total).collect()
    };
    let (qx, qy) = (normalized(&qx), normalized(&qy));
    let q: Vec<Rational> = (0..rows * cols)
        .map(|k| &qx[k / cols] * &qy[k % cols])
        .collect();
    let slack = Rational::new(BigInt::one(), BigInt::one() << 100);
    let limit = e_q - &slack;
    let admissible = |alpha: &Rational| -> Result<Option<Vec<Rational>>> {
        let r = rounded_tilt(&pe, &q, alpha)?;
        let Some(d) = relative_entropy(&r, &q, WITNESS_BITS)? else {
            return Ok(None);
        };
        Ok(d.hi_rational().filter(|h| *h <= limit).map(|_| r))
    };
    let denom = BigInt::one() << ALPHA_SEARCH_BITS;
    let (mut lo, mut hi) = (BigInt::zero(), denom.clone());
    let mut best = admissible(&Rational::zero())?
        .ok_or_else(|| Error::Domain("the tilt at α = 0 is not admissible".into()))?;
    while &hi - &lo > BigInt::one() {
        let mid: BigInt = (&lo + &hi) >> 1;
        match admissible(&Rational::new(mid.clone(), denom.clone()))? {
            Some(r) => {
                best = r;
                lo = mid;
            }
            None => hi = mid,
        }
    }
    FinitePmf::from_rationals(Shape::Joint { rows, cols }, best)
}

/// Searches a witness and verifies it against `claim`.
pub fn certify_upper(
    p: &FinitePmf,
    e_q: &Rational,
    claim: &Rational,
    bits: u32,
    starts: usize,
) -> Result<UpperCertificate> {
    let r = upper_witness(p, e_q, starts)?;
    verify_upper_bound(p, &r, e_q, claim, bits)
}

/// Combines two upper bounds and a lower bound at the midpoint exponent
/// into a certificate that `E_P(·)` is not convex. The gap is
/// `lower − (upper₁ + upper₂)/2`, required positive.
pub fn nonconvexity_certificate(
    upper: [UpperCertificate; 2],
    lower: LowerCertificate,
) -> Result<NonconvexityCertificate> {
    if !lower.is_complete() {
        return Err(Error::Precondition(
            "the lower bound certificate still has pending boxes".into(),
        ));
    }
    for (k, u) in upper.iter().enumerate() {
        if u.p != lower.p {
            return Err(Error::Precondition(format!(
                "upper bound {} uses a different p",
                k + 1
            )));
        }
    }
    let two = Rational::from_integer(2.into());
    let mid = (&upper[0].e_q + &upper[1].e_q) / &two;
    if mid != lower.e_q {
        return Err(Error::Precondition(format!(
            "lower bound is at e_q = {} but the upper bounds average to {}",
            lower.e_q, mid
        )));
    }
    let chord = (&upper[0].value + &upper[1].value) / &two;
    let gap = &lower.value - chord;
    if !gap.is_positive() {
        return Err(Error::Precondition(format!(
            "lower bound does not exceed the chord: gap {gap}"
        )));
    }
    Ok(NonconvexityCertificate { upper, lower, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example1;

    fn rat(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    #[test]
    fn independent_witness_has_zero_dependence() {
        let p = FinitePmf::from_rationals(
            Shape::Joint { rows: 2, cols: 2 },
            vec![rat(1, 2), rat(1, 4), rat(1, 8), rat(1, 8)],
        )
        .unwrap();
        let r = FinitePmf::from_rationals(Shape::Joint { rows: 2, cols: 2 }, vec![rat(1, 4); 4])
            .unwrap();
        // D(uniform ‖ p) = ln 4 − ... ≈ 0.1733.
        assert!(verify_upper_bound(&p, &r, &Rational::zero(), &rat(18, 100), 128).is_ok());
        assert!(verify_upper_bound(&p, &r, &Rational::zero(), &rat(17, 100), 128).is_err());
    }

    #[test]
    fn support_violation_is_reported() {
        let p = FinitePmf::from_rationals(
            Shape::Joint { rows: 2, cols: 2 },
            vec![rat(1, 2), Rational::zero(), Rational::zero(), rat(1, 2)],
        )
        .unwrap();
        let r = FinitePmf::from_rationals(Shape::Joint { rows: 2, cols: 2 }, vec![rat(1, 4); 4])
            .unwrap();
        let err = verify_upper_bound(&p, &r, &rat(1, 1), &rat(100, 1), 64).unwrap_err();
        assert!(err.to_string().contains("supp"));
    }

    #[test]
    fn witness_respects_constraint() {
        let p = example1::pmf();
        let e = rat(1, 10);
        let r = upper_witness(&p, &e, 4).unwrap();
        let est = ep_of_eq(&p.to_float(), 0.1, 4).unwrap().value;
        let claim = from_f64_exact(est + 1e-9);
        assert!(verify_upper_bound(&p, &r, &e, &claim, 128).is_ok());
    }
}
