//! Biconjugates through `J_α`, and the two-distribution duality.

use super::mirror::{self, MirrorOptions};
use super::{Functional, Program};
use crate::distributions::dependence::{JAlphaOptions, JAlphaSolver};
use crate::distributions::divergence::{kl_slices, mi_slice, renyi_slices};
use crate::distributions::{same_shape, FinitePmf};
use crate::error::{Error, Result};

/// Smallest order used; `(1−α)/α` is capped at `1/ALPHA_MIN − 1`.
pub const ALPHA_MIN: f64 = 1e-4;
pub const ALPHA_GRID_POINTS: usize = 256;

const GOLDEN_STEPS: usize = 40;

/// Orders in `[ALPHA_MIN, 1 − ALPHA_MIN]`, log-spaced toward both ends.
fn alpha_grid() -> Vec<f64> {
    let half = ALPHA_GRID_POINTS / 2;
    let (a, b) = (ALPHA_MIN.ln(), 0.5f64.ln());
    let lower: Vec<f64> = (0..half)
        .map(|k| (a + (b - a) * k as f64 / (half - 1) as f64).exp())
        .collect();
    let mut grid = lower.clone();
    grid.extend(lower.iter().rev().skip(1).map(|v| 1.0 - v));
    grid
}

/// Maximizes `f` over `[lo, hi]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_STEPS {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Grid maximum of `f` followed by golden refinement between the neighbours
/// of the best grid point.
fn grid_then_golden(grid: &[f64], values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let (k, best) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (k, v)| if v > acc.1 { (k, v) } else { acc },
            );
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(grid.len() - 1)];
    if hi <= lo {
        return best;
    }
    let (_, refined) = golden_max(f, lo, hi);
    best.max(refined)
}

/// `J_α(P)` on a fixed grid of orders, reusable across exponent arguments.
pub struct DependenceCurve {
    probs: Vec<f64>,
    rows: usize,
    cols: usize,
    opts: JAlphaOptions,
    grid: Vec<f64>,
    values: Vec<f64>,
    mutual_information: f64,
}

impl DependenceCurve {
    pub fn new(p: &FinitePmf, starts: usize) -> Result<Self> {
        let (rows, cols) = p.require_joint()?;
        let opts = JAlphaOptions {
            starts: starts.max(1),
            ..JAlphaOptions::default()
        };
        let probs = p.probs().to_vec();
        let grid = alpha_grid();
        let solver = JAlphaSolver::new(&probs, rows, cols);
        let values = grid.iter().map(|&a| solver.solve(a, &opts).value).collect();
        let mutual_information = mi_slice(&probs, rows, cols);
        Ok(Self {
            probs,
            rows,
            cols,
            opts,
            grid,
            values,
            mutual_information,
        })
    }

    pub fn j(&self, alpha: f64) -> f64 {
        if alpha >= 1.0 {
            return self.mutual_information;
        }
        JAlphaSolver::new(&self.probs, self.rows, self.cols)
            .solve(alpha, &self.opts)
            .value
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `sup_{α∈(0,1]} ((1−α)/α)(J_α − e_q)`; the `α = 1` term is `0`.
    pub fn ep_biconjugate(&self, e_q: f64) -> f64 {
        // J_α ≥ 0, so the α → 0 end diverges.
        if e_q < 0.0 {
            return f64::INFINITY;
        }
        let term = |a: f64, j: f64| (1.0 - a) / a * (j - e_q);
        let vals: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(&a, &j)| term(a, j))
            .collect();
        let refined = grid_then_golden(&self.grid, &vals, |a| term(a, self.j(a)));
        refined.max(0.0)
    }

    /// `sup_{α∈[0,1)} [J_α − (α/(1−α)) e_p]`; the `α = 0` term is `0`, and the
    /// `α → 1` limit is `I(P)` when `e_p = 0` and `+∞` when `e_p < 0`.
    pub fn eq_biconjugate(&self, e_p: f64) -> f64 {
        if e_p < 0.0 {
            return f64::INFINITY;
        }
        let term = |a: f64, j: f64| j - a / (1.0 - a) * e_p;
        let vals: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(&a, &j)| term(a, j))
            .collect();
        let refined = grid_then_golden(&self.grid, &vals, |a| term(a, self.j(a)));
        let limit = if e_p == 0.0 {
            self.mutual_information
        } else {
            f64::NEG_INFINITY
        };
        refined.max(0.0).max(limit)
    }
}

/// Biconjugate of `E_P(·)` at `e_q`.
pub fn ep_biconjugate(p: &FinitePmf, e_q: f64) -> Result<f64> {
    Ok(DependenceCurve::new(p, JAlphaOptions::default().starts)?.ep_biconjugate(e_q))
}

/// Biconjugate of `E_Q(·)` at `e_p`.
pub fn eq_biconjugate(p: &FinitePmf, e_p: f64) -> Result<f64> {
    Ok(DependenceCurve::new(p, JAlphaOptions::default().starts)?.eq_biconjugate(e_p))
}

/// `(inf {D(R‖P) : D(R‖Q) ≤ e_q}, sup_{α∈(0,1]} ((1−α)/α)(D_α(P‖Q) − e_q))`.
///
/// The primal side is a mirror-descent estimate made feasible by mixing
/// toward `Q` restricted to `supp P`; the dual side is a grid search.
pub fn simple_duality(p: &FinitePmf, q: &FinitePmf, e_q: f64) -> Result<(f64, f64)> {
    same_shape(p, q)?;
    if e_q < 0.0 {
        return Err(Error::Precondition(format!(
            "e_q = {e_q} must be nonnegative"
        )));
    }
    let (pv, qv) = (p.probs(), q.probs());
    let dual = {
        let term = |a: f64| {
            if a >= 1.0 {
                return 0.0;
            }
            (1.0 - a) / a * (renyi_slices(pv, qv, a) - e_q)
        };
        let mut grid = alpha_grid();
        grid.push(1.0);
        let vals: Vec<f64> = grid.iter().map(|&a| term(a)).collect();
        grid_then_golden(&grid, &vals, term).max(0.0)
    };
    Ok((duality_primal(pv, qv, e_q), dual))
}

fn duality_primal(p: &[f64], q: &[f64], e: f64) -> f64 {
    if kl_slices(p, q) <= e {
        return 0.0;
    }
    let supp: Vec<bool> = p.iter().zip(q).map(|(&a, &b)| a > 0.0 && b > 0.0).collect();
    let q_mass: f64 = q
        .iter()
        .zip(&supp)
        .filter(|(_, &on)| on)
        .map(|(v, _)| v)
        .sum();
    if q_mass <= 0.0 || -q_mass.ln() > e {
        return f64::INFINITY;
    }
    let anchor: Vec<f64> = q
        .iter()
        .zip(&supp)
        .map(|(&v, &on)| if on { v / q_mass } else { 0.0 })
        .collect();
    let ln = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
    let program = Program {
        objective: Functional::Kl(ln(p)),
        constraint: Functional::Kl(ln(q)),
        bound: e,
    };
    let opts = MirrorOptions {
        starts: 4,
        iterations: 400,
        ..MirrorOptions::default()
    };
    let seeds = vec![ln(p), ln(&anchor)];
    mirror::minimize(&program, &supp, &seeds, &opts)
        .into_iter()
        .map(|run| {
            let r: Vec<f64> = run.ln_r.iter().map(|v| v.exp()).collect();
            let mix = |t: f64| -> Vec<f64> {
                r.iter()
                    .zip(&anchor)
                    .map(|(a, b)| (1.0 - t) * a + t * b)
                    .collect()
            };
            // D(R_t‖Q) is convex in t and at most e at t = 1.
            let t = if kl_slices(&r, q) <= e {
                0.0
            } else {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if kl_slices(&mix(mid), q) <= e {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            };
            kl_slices(&mix(t), p)
        })
        .fold(f64::INFINITY, f64::min)
}
