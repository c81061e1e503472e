//! The Hölder-type lower bound on `inf_{Q∈box} sup_α ((1−α)/α)(D_α(P‖Q) − e_q)`.
//!
//! For `β ≥ 0` and any product `Q` in the box,
//! `Σ P^α Q^{1−α} ≤ [Σ (P^α + β)^{1/α}]^α − D` with `D = inf_box Σ β Q^{1−α}`,
//! which turns into a lower bound on the objective at that fixed `α`.

use super::interval::Interval;
use super::mp::{Enclosure, MpInterval};
use super::product_box::ProductBox;
use crate::distributions::FinitePmf;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Per-box bound parameters. Both are dyadic rationals stored exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundParams {
    pub alpha: f64,
    pub beta: Vec<f64>,
}

impl BoundParams {
    pub fn new(alpha: f64, beta: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha = {alpha} is outside (0, 1)")));
        }
        if beta.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::invalid(
                "beta entries must be finite and nonnegative",
            ));
        }
        // 1 − α is formed exactly only when α has no bits below 2^-53.
        if 1.0 - (1.0 - alpha) != alpha {
            return Err(Error::invalid(format!(
                "alpha = {alpha} is too fine to use exactly"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Accepts rationals only when they are exactly representable.
    pub fn from_rationals(alpha: &Rational, beta: &[Rational]) -> Result<Self> {
        let exact = |r: &Rational| {
            let (lo, hi) = rational::enclose(r);
            if lo == hi {
                Ok(lo)
            } else {
                Err(Error::invalid(format!(
                    "{} is not an exact binary fraction",
                    rational::format_rational(r)
                )))
            }
        };
        let beta = beta.iter().map(exact).collect::<Result<Vec<_>>>()?;
        Self::new(exact(alpha)?, beta)
    }

    pub fn alpha_rational(&self) -> Rational {
        rational::from_f64_exact(self.alpha)
    }

    pub fn beta_rationals(&self) -> Vec<Rational> {
        self.beta
            .iter()
            .map(|&b| rational::from_f64_exact(b))
            .collect()
    }
}

/// A box bound together with whether it was vacuous.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundValue {
    pub bound: Interval,
    /// The braced quantity could not be shown positive; `bound.lo = −∞`.
    pub vacuous: bool,
}

/// `P` and `e_q` enclosed once at a given precision.
#[derive(Clone, Debug)]
pub struct Prepared<E: Enclosure> {
    p: Vec<E>,
    e_q: E,
    rows: usize,
    cols: usize,
    bits: usize,
}

impl<E: Enclosure> Prepared<E> {
    pub fn new(p: &FinitePmf, e_q: &Rational, bits: usize) -> Result<Self> {
        let (rows, cols) = p.require_joint()?;
        let exact = p.exact().ok_or_else(|| {
            Error::Precondition("certified bounds need a rational-backed PMF".into())
        })?;
        Ok(Self {
            p: exact.iter().map(|r| E::from_rational(r, bits)).collect(),
            e_q: E::from_rational(e_q, bits),
            rows,
            cols,
            bits,
        })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    fn check(&self, b: &ProductBox, params: &BoundParams) -> Result<()> {
        if b.rows() != self.rows || b.cols() != self.cols {
            return Err(Error::ShapeMismatch {
                left: format!("({}, {})", self.rows, self.cols),
                right: format!("({}, {})", b.rows(), b.cols()),
            });
        }
        if params.beta.len() != self.rows * self.cols {
            return Err(Error::invalid(format!(
                "beta has {} entries, expected {}",
                params.beta.len(),
                self.rows * self.cols
            )));
        }
        Ok(())
    }

    /// Enclosure of `min` over extreme-point pairs of `Σ β Q_X^{1−α} Q_Y^{1−α}`.
    pub fn d_lower(&self, b: &ProductBox, params: &BoundParams) -> Result<E> {
        self.check(b, params)?;
        if b.is_empty() {
            return Err(Error::EmptyRegion("box does not meet the simplex".into()));
        }
        let bits = self.bits;
        let expo = E::from_f64(1.0 - params.alpha, bits);
        let (xs, ys) = b.extreme_enclosures::<E>(bits);
        let powers = |pts: Vec<Vec<E>>| -> Result<Vec<Vec<E>>> {
            pts.into_iter()
                .map(|q| q.iter().map(|v| v.pow(&expo)).collect::<Result<Vec<_>>>())
                .collect()
        };
        let px = powers(xs)?;
        let py = powers(ys)?;
        let beta: Vec<Option<E>> = params
            .beta
            .iter()
            .map(|&v| (v > 0.0).then(|| E::from_f64(v, bits)))
            .collect();
        let mut best: Option<E> = None;
        for qx in &px {
            for qy in &py {
                let mut acc = E::from_f64(0.0, bits);
                for (x, ax) in qx.iter().enumerate() {
                    for (y, ay) in qy.iter().enumerate() {
                        if let Some(bz) = &beta[x * self.cols + y] {
                            acc = acc.add(&bz.mul(&ax.mul(ay)));
                        }
                    }
                }
                best = Some(match best {
                    None => acc,
                    Some(m) => m.min(&acc),
                });
            }
        }
        best.ok_or_else(|| Error::EmptyRegion("box has no extreme points".into()))
    }

    /// The bound as an enclosure at this precision, before conversion.
    pub fn bound(&self, b: &ProductBox, params: &BoundParams) -> Result<(E, bool)> {
        let d = self.d_lower(b, params)?;
        let bits = self.bits;
        let alpha = E::from_f64(params.alpha, bits);
        let one = E::from_f64(1.0, bits);
        let inv = one.div(&alpha)?;
        // Cells no member of the box can charge drop out of both sides.
        let active = b.active_cells();
        let mut total = E::from_f64(0.0, bits);
        for ((pz, &bz), _) in self
            .p
            .iter()
            .zip(&params.beta)
            .zip(&active)
            .filter(|(_, &on)| on)
        {
            let a = pz.pow(&alpha)?.add(&E::from_f64(bz, bits));
            total = total.add(&a.pow(&inv)?);
        }
        let holder = total.pow(&alpha)?;
        // Understating D only enlarges the brace, so the lower endpoint is sound.
        let brace = holder.sub(&d.lower_point());
        let slope = E::from_f64(1.0 - params.alpha, bits).mul(&inv);
        let penalty = slope.mul(&self.e_q);
        if !(brace.to_f64_interval().lo() > 0.0) {
            return Ok((E::from_f64(f64::NEG_INFINITY, bits), true));
        }
        let value = E::from_f64(0.0, bits)
            .sub(&brace.ln()?.mul(&inv))
            .sub(&penalty);
        Ok((value, false))
    }

    pub fn bound_value(&self, b: &ProductBox, params: &BoundParams) -> Result<BoundValue> {
        let (value, vacuous) = self.bound(b, params)?;
        if vacuous {
            return Ok(BoundValue {
                bound: Interval::new(f64::NEG_INFINITY, f64::INFINITY)?,
                vacuous,
            });
        }
        Ok(BoundValue {
            bound: value.to_f64_interval(),
            vacuous,
        })
    }
}

/// Enclosure of `inf_{Q∈box} Σ β(z) Q(z)^{1−α}` in `f64` interval arithmetic.
pub fn d_lower(b: &ProductBox, params: &BoundParams) -> Result<Interval> {
    let prep = Prepared::<Interval> {
        p: Vec::new(),
        e_q: Interval::ZERO,
        rows: b.rows(),
        cols: b.cols(),
        bits: 53,
    };
    prep.d_lower(b, params)
}

/// Certified bound for one box at `f64` precision.
pub fn holder_bound(
    p: &FinitePmf,
    b: &ProductBox,
    params: &BoundParams,
    e_q: &Rational,
) -> Result<BoundValue> {
    Prepared::<Interval>::new(p, e_q, 53)?.bound_value(b, params)
}

/// As [`holder_bound`] with endpoints carried at `bits` of precision.
pub fn holder_bound_at(
    p: &FinitePmf,
    b: &ProductBox,
    params: &BoundParams,
    e_q: &Rational,
    bits: usize,
) -> Result<BoundValue> {
    if bits <= 53 {
        return holder_bound(p, b, params, e_q);
    }
    Prepared::<MpInterval>::new(p, e_q, bits)?.bound_value(b, params)
}
