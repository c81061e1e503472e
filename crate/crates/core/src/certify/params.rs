//! Heuristic choice of `(α, β)` per box. Nothing here affects soundness.

use super::bounds::{BoundParams, Prepared};
use super::interval::Interval;
use super::product_box::ProductBox;
use crate::distributions::dependence::log_sum_exp;
use crate::distributions::FinitePmf;
use crate::error::Result;
use crate::rational::{self, Rational};

/// `α` values are rounded to multiples of `2^-ALPHA_BITS`.
pub const ALPHA_BITS: i32 = 30;
/// `β` values are rounded to multiples of `2^-BETA_BITS`.
pub const BETA_BITS: i32 = 44;

const ALPHA_FLOOR: f64 = 1.0 / (1u64 << 20) as f64;

/// Float model of one point `Q = Q_X ⊗ Q_Y` for a fixed `P`.
pub struct Tilt<'a> {
    ln_p: &'a [f64],
    ln_q: Vec<f64>,
}

impl<'a> Tilt<'a> {
    pub fn new(ln_p: &'a [f64], qx: &[f64], qy: &[f64]) -> Self {
        let ln_q = qx
            .iter()
            .flat_map(|a| qy.iter().map(move |b| (a * b).ln()))
            .collect();
        Self { ln_p, ln_q }
    }

    fn terms(&self, alpha: f64) -> Vec<f64> {
        self.ln_p
            .iter()
            .zip(&self.ln_q)
            .map(|(&lp, &lq)| {
                if lp == f64::NEG_INFINITY || lq == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    alpha * lp + (1.0 - alpha) * lq
                }
            })
            .collect()
    }

    /// `−(1/α) ln Σ P^α Q^{1−α} − ((1−α)/α) e`.
    pub fn objective(&self, alpha: f64, e: f64) -> f64 {
        let ln_s = log_sum_exp(&self.terms(alpha));
        -ln_s / alpha - (1.0 - alpha) / alpha * e
    }

    /// `D(R_α‖Q)` for the tilted `R_α ∝ P^α Q^{1−α}`.
    fn tilt_divergence(&self, alpha: f64) -> f64 {
        let t = self.terms(alpha);
        let ln_s = log_sum_exp(&t);
        t.iter()
            .zip(&self.ln_q)
            .filter(|(ti, _)| ti.is_finite())
            .map(|(&ti, &lq)| (ti - ln_s).exp() * (ti - ln_s - lq))
            .sum()
    }

    /// Maximizer over `α ∈ (0, 1)` of [`Self::objective`]: the root of
    /// `D(R_α‖Q) = e`, which is increasing in `α`.
    pub fn best_alpha(&self, e: f64) -> f64 {
        let (mut lo, mut hi) = (ALPHA_FLOOR, 1.0 - ALPHA_FLOOR);
        if self.tilt_divergence(lo) >= e {
            return lo;
        }
        if self.tilt_divergence(hi) <= e {
            return hi;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.tilt_divergence(mid) < e {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn round_to_grid(x: f64, bits: i32) -> f64 {
    let scale = 2f64.powi(bits);
    (x * scale).round() / scale
}

fn snap_alpha(alpha: f64) -> f64 {
    let step = 2f64.powi(-ALPHA_BITS);
    round_to_grid(alpha, ALPHA_BITS).clamp(step, 1.0 - step)
}

/// Float model of the bound at a fixed `α` over one box.
struct BoxModel {
    alpha: f64,
    /// `P^α` on active cells, zero elsewhere.
    pa: Vec<f64>,
    active: Vec<bool>,
    /// `Q^{1−α}` at every pair of extreme points.
    w: Vec<Vec<f64>>,
}

impl BoxModel {
    fn new(p: &[f64], active: &[bool], xs: &[Vec<f64>], ys: &[Vec<f64>], alpha: f64) -> Self {
        let pa = p
            .iter()
            .zip(active)
            .map(|(&pz, &on)| if on { pz.powf(alpha) } else { 0.0 })
            .collect();
        let e = 1.0 - alpha;
        let w = xs
            .iter()
            .flat_map(|qx| {
                ys.iter().map(move |qy| {
                    qx.iter()
                        .flat_map(|a| qy.iter().map(move |b| a.powf(e) * b.powf(e)))
                        .collect()
                })
            })
            .collect();
        Self {
            alpha,
            pa,
            active: active.to_vec(),
            w,
        }
    }

    /// `ln(A − D)` for `β`, and the index of the pair attaining `D`.
    fn log_brace(&self, beta: &[f64]) -> (f64, usize) {
        let inv = 1.0 / self.alpha;
        let sum: f64 = self
            .pa
            .iter()
            .zip(beta)
            .zip(&self.active)
            .filter(|(_, &on)| on)
            .map(|((a, b), _)| (a + b).powf(inv))
            .sum();
        let holder = sum.powf(self.alpha);
        let (k, d) = self
            .w
            .iter()
            .map(|wk| wk.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>())
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (k, d)| if d < acc.1 { (k, d) } else { acc },
            );
        let brace = holder - d;
        (
            if brace > 0.0 {
                brace.ln()
            } else {
                f64::INFINITY
            },
            k,
        )
    }

    fn beta_along(&self, v: &[f64], c: f64) -> Vec<f64> {
        self.pa
            .iter()
            .zip(v)
            .zip(&self.active)
            .map(|((&a, &vz), &on)| if on { (c * vz - a).max(0.0) } else { 0.0 })
            .collect()
    }

    /// Best `c` for `β = max(0, c·v − P^α)` by golden section on `ln c`.
    fn best_along(&self, v: &[f64]) -> Option<(f64, Vec<f64>, usize)> {
        let c_ref = self
            .pa
            .iter()
            .zip(v)
            .filter(|(&a, &vz)| a > 0.0 && vz > 0.0)
            .map(|(a, vz)| a / vz)
            .fold(0.0, f64::max);
        if c_ref <= 0.0 || !c_ref.is_finite() {
            return None;
        }
        let eval = |t: f64| self.log_brace(&self.beta_along(v, t.exp())).0;
        let (mut a, mut b) = (c_ref.ln() - 4.0, c_ref.ln() + 1.0);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (eval(x1), eval(x2));
        for _ in 0..28 {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = eval(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = eval(x2);
            }
        }
        let t = if f1 <= f2 { x1 } else { x2 };
        // Compare with the Hölder-tight choice c = c_ref.
        let mut best: Option<(f64, Vec<f64>, usize)> = None;
        for c in [t.exp(), c_ref] {
            let beta = self.beta_along(v, c);
            let (f, k) = self.log_brace(&beta);
            if best.as_ref().is_none_or(|(bf, _, _)| f < *bf) {
                best = Some((f, beta, k));
            }
        }
        best
    }

    /// Searches directions `v = W^{α/(1−α)}` with `W` a mixture of the
    /// extreme-point powers, shifting weight toward the pair attaining `D`.
    fn search(&self, qc: &[f64], rounds: usize) -> Option<(f64, Vec<f64>)> {
        let expo = self.alpha / (1.0 - self.alpha);
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut consider = |cand: Option<(f64, Vec<f64>, usize)>| -> Option<usize> {
            let (f, beta, k) = cand?;
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, beta));
            }
            Some(k)
        };
        let center: Vec<f64> = qc.iter().map(|q| q.powf(self.alpha)).collect();
        consider(self.best_along(&center));
        let n = self.w.len();
        let mut lambda = vec![1.0 / n as f64; n];
        for round in 0..rounds {
            let mix: Vec<f64> = (0..self.pa.len())
                .map(|z| {
                    self.w
                        .iter()
                        .zip(&lambda)
                        .map(|(wk, l)| l * wk[z])
                        .sum::<f64>()
                })
                .collect();
            let v: Vec<f64> = mix.iter().map(|m| m.powf(expo)).collect();
            let Some(k) = consider(self.best_along(&v)) else {
                break;
            };
            let eta = 1.0 / (round as f64 + 2.0);
            for (i, l) in lambda.iter_mut().enumerate() {
                *l = (1.0 - eta) * *l + if i == k { eta } else { 0.0 };
            }
        }
        best
    }
}

/// Rounded `β`; rounding never makes an entry negative.
fn snap_beta(beta: &[f64]) -> Vec<f64> {
    beta.iter()
        .map(|&b| round_to_grid(b, BETA_BITS).max(0.0))
        .collect()
}

/// Picks `(α, β)` for a box. `α` maximizes the objective at a central point
/// of the box (plus `extra_alphas` evenly spaced alternatives); for each `α`,
/// `β = max(0, c·v − P^α)` is tuned over the scale `c` and the direction `v`
/// using a float model, and the certified `f64` bound decides among them.
pub fn choose_parameters_prepared(
    prep: &Prepared<Interval>,
    p: &[f64],
    b: &ProductBox,
    e_q: f64,
    extra_alphas: usize,
) -> BoundParams {
    let ln_p: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    let fallback = || BoundParams {
        alpha: 0.5,
        beta: vec![0.0; p.len()],
    };
    let Some((qx, qy)) = b.center() else {
        return fallback();
    };
    let qc: Vec<f64> = qx
        .iter()
        .flat_map(|a| qy.iter().map(move |b| a * b))
        .collect();
    let tilt = Tilt::new(&ln_p, &qx, &qy);
    let active = b.active_cells();
    let (xs, ys) = b.extreme_points_f64();
    let mut alphas = vec![snap_alpha(tilt.best_alpha(e_q))];
    alphas.extend((1..=extra_alphas).map(|k| snap_alpha(k as f64 / (extra_alphas + 1) as f64)));

    let mut best: Option<(f64, BoundParams)> = None;
    for &alpha in &alphas {
        let mut candidates = vec![BoundParams {
            alpha,
            beta: vec![0.0; p.len()],
        }];
        let model = BoxModel::new(p, &active, &xs, &ys, alpha);
        if let Some((_, beta)) = model.search(&qc, SEARCH_ROUNDS) {
            candidates.push(BoundParams {
                alpha,
                beta: snap_beta(&beta),
            });
        }
        for cand in candidates {
            let lo = match prep.bound(b, &cand) {
                Ok((v, false)) => v.lo(),
                _ => f64::NEG_INFINITY,
            };
            if best.as_ref().is_none_or(|(l, _)| lo > *l) {
                best = Some((lo, cand));
            }
        }
    }
    // With `β = 0` the bound is about `−((1−α)/α)·e_q`, nearly zero for `α`
    // close to one; worth having when nothing tuned is positive.
    if best.as_ref().is_none_or(|(l, _)| *l < 0.0) {
        let cand = BoundParams {
            alpha: 1.0 - NEAR_ONE,
            beta: vec![0.0; p.len()],
        };
        if let Ok((v, false)) = prep.bound(b, &cand) {
            if best.as_ref().is_none_or(|(l, _)| v.lo() > *l) {
                best = Some((v.lo(), cand));
            }
        }
    }
    best.map(|(_, params)| params).unwrap_or_else(fallback)
}

const NEAR_ONE: f64 = 1.0 / 1024.0;

const SEARCH_ROUNDS: usize = 8;

/// Parameters for one box of the certified search at `f64` precision.
pub fn choose_parameters(
    p: &FinitePmf,
    b: &ProductBox,
    e_q: &Rational,
    extra_alphas: usize,
) -> Result<BoundParams> {
    let prep = Prepared::<Interval>::new(p, e_q, 53)?;
    Ok(choose_parameters_prepared(
        &prep,
        p.probs(),
        b,
        rational::to_f64(e_q),
        extra_alphas,
    ))
}
