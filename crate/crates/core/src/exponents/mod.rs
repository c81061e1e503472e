//! Error-exponent functions `E_P(·)`, `E_Q(·)`, their convex biconjugates, and
//! the achievability predicate.

mod conjugate;
pub(crate) mod mirror;
pub(crate) mod qspace;

pub use conjugate::{
    ep_biconjugate, eq_biconjugate, simple_duality, DependenceCurve, ALPHA_GRID_POINTS, ALPHA_MIN,
};
pub use mirror::MirrorOptions;

use serde::{Deserialize, Serialize};

use crate::distributions::divergence::mi_slice;
use crate::distributions::{marginal_vectors, FinitePmf};
use crate::error::{Error, Result};
use mirror::{MirrorResult, Penalized};
use qspace::{Side, TiltPoint, TiltProblem};

/// `(E_P, E_Q)`; negative values are allowed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub e_p: f64,
    pub e_q: f64,
}

impl ExponentPair {
    pub fn new(e_p: f64, e_q: f64) -> Result<Self> {
        if !e_p.is_finite() || !e_q.is_finite() {
            return Err(Error::invalid("exponent pairs must be finite"));
        }
        Ok(Self { e_p, e_q })
    }
}

/// Best feasible value found, with the attaining `R` and the dual bound.
#[derive(Clone, Debug)]
pub struct ExponentEstimate {
    pub value: f64,
    pub witness: Option<FinitePmf>,
    /// Biconjugate at the same argument; never above the true function.
    pub dual_lower: f64,
    pub starts_used: usize,
    /// The product `(Q_X, Q_Y)` whose tilt produced the witness, if any.
    pub product: Option<(Vec<f64>, Vec<f64>)>,
}

/// Optimizer settings shared by the primal estimates.
#[derive(Clone, Debug)]
pub struct PrimalOptions {
    pub mirror: MirrorOptions,
    /// Random starts for the product-space refinement, on top of the mirror
    /// descent results and the marginals of `P`.
    pub product_starts: usize,
    pub polish_iterations: usize,
    /// Starts used by the biconjugate attached as `dual_lower`.
    pub dual_starts: usize,
}

impl Default for PrimalOptions {
    fn default() -> Self {
        Self {
            mirror: MirrorOptions::default(),
            product_starts: 16,
            polish_iterations: 400,
            dual_starts: 8,
        }
    }
}

impl PrimalOptions {
    pub fn with_starts(starts: usize) -> Self {
        let mut o = Self::default();
        o.mirror.starts = starts.max(1);
        o.product_starts = starts.max(1) / 2;
        o
    }
}

/// Relative entropy `D(R‖T)` or mutual information `I(R)`, with gradients
/// in the mirror-descent coordinates.
enum Functional {
    Kl(Vec<f64>),
    Mi { rows: usize, cols: usize },
}

impl Functional {
    fn eval(&self, ln_r: &[f64]) -> (f64, Vec<f64>) {
        let r: Vec<f64> = ln_r.iter().map(|v| v.exp()).collect();
        match self {
            Functional::Kl(ln_t) => {
                let grad: Vec<f64> = ln_r
                    .iter()
                    .zip(ln_t)
                    .map(|(&a, &b)| if a == f64::NEG_INFINITY { 0.0 } else { a - b })
                    .collect();
                let value = r
                    .iter()
                    .zip(&grad)
                    .map(|(p, g)| p * g)
                    .sum::<f64>()
                    .max(0.0);
                (value, grad)
            }
            Functional::Mi { rows, cols } => {
                let (mx, my) = marginal_vectors(&r, *rows, *cols);
                let grad: Vec<f64> = ln_r
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| {
                        if a == f64::NEG_INFINITY {
                            0.0
                        } else {
                            a - mx[i / cols].ln() - my[i % cols].ln()
                        }
                    })
                    .collect();
                let value = r
                    .iter()
                    .zip(&grad)
                    .map(|(p, g)| p * g)
                    .sum::<f64>()
                    .max(0.0);
                (value, grad)
            }
        }
    }
}

struct Program {
    objective: Functional,
    constraint: Functional,
    bound: f64,
}

impl Penalized for Program {
    fn objective(&self, ln_r: &[f64]) -> (f64, Vec<f64>) {
        self.objective.eval(ln_r)
    }
    fn constraint(&self, ln_r: &[f64]) -> (f64, Vec<f64>) {
        self.constraint.eval(ln_r)
    }
    fn bound(&self) -> f64 {
        self.bound
    }
}

fn ln_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.ln()).collect()
}

fn support(p: &[f64]) -> Vec<bool> {
    p.iter().map(|&v| v > 0.0).collect()
}

fn joint_from(rows: usize, cols: usize, r: &[f64]) -> Result<FinitePmf> {
    let total: f64 = r.iter().sum();
    FinitePmf::joint(rows, cols, r.iter().map(|v| v / total).collect())
}

/// Runs mirror descent, then refines over products from every run's
/// marginals. Returns the best tilt point and the number of starts.
fn solve_side(
    p: &[f64],
    rows: usize,
    cols: usize,
    e: f64,
    side: Side,
    opts: &PrimalOptions,
) -> (Option<TiltPoint>, Option<MirrorResult>, usize) {
    let program = match side {
        Side::P => Program {
            objective: Functional::Kl(ln_vec(p)),
            constraint: Functional::Mi { rows, cols },
            bound: e,
        },
        Side::Q => Program {
            objective: Functional::Mi { rows, cols },
            constraint: Functional::Kl(ln_vec(p)),
            bound: e,
        },
    };
    let supp = support(p);
    let runs = mirror::minimize(&program, &supp, &[ln_vec(p)], &opts.mirror);
    let mut seeds: Vec<(Vec<f64>, Vec<f64>)> = vec![marginal_vectors(p, rows, cols)];
    for run in &runs {
        let r: Vec<f64> = run.ln_r.iter().map(|v| v.exp()).collect();
        seeds.push(marginal_vectors(&r, rows, cols));
    }
    let problem = TiltProblem::new(p, rows, cols, e, side);
    let polished = problem.multistart(
        &seeds,
        opts.product_starts,
        opts.mirror.seed ^ 0x5151,
        opts.polish_iterations,
    );
    let feasible_run = runs
        .into_iter()
        .filter(|r| r.constraint <= e)
        .min_by(|a, b| a.objective.total_cmp(&b.objective));
    let starts = seeds.len() + opts.product_starts;
    (polished, feasible_run, starts)
}

/// Picks the better of the product-space optimum and a feasible mirror run.
fn assemble(
    rows: usize,
    cols: usize,
    polished: Option<TiltPoint>,
    run: Option<MirrorResult>,
    dual_lower: f64,
    starts_used: usize,
) -> Result<ExponentEstimate> {
    let tilt_value = polished.as_ref().map_or(f64::INFINITY, |t| t.value);
    let run_value = run.as_ref().map_or(f64::INFINITY, |r| r.objective);
    if tilt_value.is_infinite() && run_value.is_infinite() {
        return Ok(ExponentEstimate {
            value: f64::INFINITY,
            witness: None,
            dual_lower,
            starts_used,
            product: None,
        });
    }
    if tilt_value <= run_value {
        let t = polished.expect("finite tilt value");
        Ok(ExponentEstimate {
            value: t.value,
            witness: Some(joint_from(rows, cols, &t.r)?),
            dual_lower,
            starts_used,
            product: Some((t.qx, t.qy)),
        })
    } else {
        let r = run.expect("finite mirror value");
        let probs: Vec<f64> = r.ln_r.iter().map(|v| v.exp()).collect();
        Ok(ExponentEstimate {
            value: r.objective,
            witness: Some(joint_from(rows, cols, &probs)?),
            dual_lower,
            starts_used,
            product: None,
        })
    }
}

/// `E_P(e_q) = inf {D(R‖P) : I(R) ≤ e_q}` estimated from above.
pub fn ep_of_eq(p: &FinitePmf, e_q: f64, starts: usize) -> Result<ExponentEstimate> {
    ep_of_eq_with(p, e_q, &PrimalOptions::with_starts(starts))
}

pub fn ep_of_eq_with(p: &FinitePmf, e_q: f64, opts: &PrimalOptions) -> Result<ExponentEstimate> {
    let (rows, cols) = p.require_joint()?;
    let probs = p.probs();
    let dual_lower = DependenceCurve::new(p, opts.dual_starts)?.ep_biconjugate(e_q);
    if e_q < 0.0 {
        return Ok(ExponentEstimate {
            value: f64::INFINITY,
            witness: None,
            dual_lower,
            starts_used: 0,
            product: None,
        });
    }
    if mi_slice(probs, rows, cols) <= e_q {
        return Ok(ExponentEstimate {
            value: 0.0,
            witness: Some(p.to_float()),
            dual_lower: dual_lower.min(0.0),
            starts_used: 0,
            product: None,
        });
    }
    let (polished, run, starts) = solve_side(probs, rows, cols, e_q, Side::P, opts);
    assemble(rows, cols, polished, run, dual_lower, starts)
}

/// `E_Q(e_p) = inf {I(R) : D(R‖P) ≤ e_p}` estimated from above.
pub fn eq_of_ep(p: &FinitePmf, e_p: f64, starts: usize) -> Result<ExponentEstimate> {
    eq_of_ep_with(p, e_p, &PrimalOptions::with_starts(starts))
}

pub fn eq_of_ep_with(p: &FinitePmf, e_p: f64, opts: &PrimalOptions) -> Result<ExponentEstimate> {
    let (rows, cols) = p.require_joint()?;
    let probs = p.probs();
    let dual_lower = DependenceCurve::new(p, opts.dual_starts)?.eq_biconjugate(e_p);
    if e_p < 0.0 {
        return Ok(ExponentEstimate {
            value: f64::INFINITY,
            witness: None,
            dual_lower,
            starts_used: 0,
            product: None,
        });
    }
    if e_p == 0.0 {
        // D(R‖P) ≤ 0 leaves only R = P.
        return Ok(ExponentEstimate {
            value: mi_slice(probs, rows, cols),
            witness: Some(p.to_float()),
            dual_lower,
            starts_used: 0,
            product: None,
        });
    }
    let (polished, run, starts) = solve_side(probs, rows, cols, e_p, Side::Q, opts);
    let mut est = assemble(rows, cols, polished, run, dual_lower, starts)?;
    // R = P is always feasible.
    let at_p = mi_slice(probs, rows, cols);
    if at_p < est.value {
        est.value = at_p;
        est.witness = Some(p.to_float());
        est.product = None;
    }
    Ok(est)
}

/// `inf_R max {D(R‖P) − e_p, I(R) − e_q}`, found as the smallest `t` with
/// `E_P(e_q + t) ≤ e_p + t` by bisection on the estimated `E_P`.
pub fn achievability_margin(p: &FinitePmf, pair: ExponentPair, starts: usize) -> Result<f64> {
    let opts = PrimalOptions::with_starts(starts);
    let (rows, cols) = p.require_joint()?;
    let probs = p.probs();
    let value_at = |t: f64| -> f64 {
        let e = pair.e_q + t;
        if e < 0.0 {
            return f64::INFINITY;
        }
        if mi_slice(probs, rows, cols) <= e {
            return 0.0;
        }
        let (polished, run, _) = solve_side(probs, rows, cols, e, Side::P, &opts);
        let a = polished.map_or(f64::INFINITY, |t| t.value);
        let b = run.map_or(f64::INFINITY, |r| r.objective);
        a.min(b)
    };
    // f(t) = E_P(e_q + t) − e_p − t is nonincreasing; both terms are ≥ 0.
    let mut lo = (-pair.e_q).max(-pair.e_p);
    if value_at(lo) <= pair.e_p + lo {
        return Ok(lo);
    }
    let mut hi = lo
        .max(mi_slice(probs, rows, cols) - pair.e_q)
        .max(-pair.e_p)
        .max(lo + 1e-12);
    while value_at(hi) > pair.e_p + hi {
        hi = lo + 2.0 * (hi - lo);
    }
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        if value_at(mid) <= pair.e_p + mid {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(hi)
}

/// Achievable iff the margin is positive.
pub fn is_achievable(p: &FinitePmf, pair: ExponentPair, starts: usize) -> Result<bool> {
    Ok(achievability_margin(p, pair, starts)? > 0.0)
}
