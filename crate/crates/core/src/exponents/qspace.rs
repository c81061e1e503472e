//! Minimization over product PMFs `Q = Q_X ⊗ Q_Y` of the value of the inner
//! problem solved by an exponential tilt `R_α ∝ P^α Q^{1−α}`.
//!
//! For `E_P` the inner problem is `inf {D(R‖P) : D(R‖Q) ≤ e}`, for `E_Q` it is
//! `inf {D(R‖Q) : D(R‖P) ≤ e}`. Taking the infimum over `Q` recovers the
//! exponent because `inf_Q D(R‖Q) = I(R)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distributions::dependence::{log_sum_exp, random_log_simplex};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Side {
    /// Objective `D(R‖P)`, constraint `D(R‖Q) ≤ e`.
    P,
    /// Objective `D(R‖Q)`, constraint `D(R‖P) ≤ e`.
    Q,
}

#[derive(Clone, Debug)]
pub(crate) struct TiltPoint {
    pub value: f64,
    pub r: Vec<f64>,
    pub qx: Vec<f64>,
    pub qy: Vec<f64>,
    /// Gradient with respect to the softmax parameters of `(Q_X, Q_Y)`.
    pub grad: Vec<f64>,
}

pub(crate) struct TiltProblem {
    ln_p: Vec<f64>,
    rows: usize,
    cols: usize,
    e: f64,
    side: Side,
}

const BISECTION_STEPS: usize = 80;

impl TiltProblem {
    pub fn new(p: &[f64], rows: usize, cols: usize, e: f64, side: Side) -> Self {
        Self {
            ln_p: p.iter().map(|v| v.ln()).collect(),
            rows,
            cols,
            e,
            side,
        }
    }

    /// Log-weights `α ln P + (1−α) ln Q`, `−∞` off `supp P`.
    fn terms(&self, alpha: f64, ln_q: &[f64]) -> Vec<f64> {
        self.ln_p
            .iter()
            .zip(ln_q)
            .map(|(&lp, &lq)| {
                if lp == f64::NEG_INFINITY || lq == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    alpha * lp + (1.0 - alpha) * lq
                }
            })
            .collect()
    }

    /// `(ln R_α, D(R_α‖P), D(R_α‖Q))`.
    fn tilt(&self, alpha: f64, ln_q: &[f64]) -> (Vec<f64>, f64, f64) {
        let t = self.terms(alpha, ln_q);
        let ln_s = log_sum_exp(&t);
        let ln_r: Vec<f64> = t.iter().map(|v| v - ln_s).collect();
        let (mut dp, mut dq) = (0.0, 0.0);
        for ((&lr, &lp), &lq) in ln_r.iter().zip(&self.ln_p).zip(ln_q) {
            if lr == f64::NEG_INFINITY {
                continue;
            }
            let r = lr.exp();
            dp += r * (lr - lp);
            dq += r * (lr - lq);
        }
        (ln_r, dp.max(0.0), dq.max(0.0))
    }

    /// Solves the inner problem at `Q`. `None` when it is infeasible.
    pub fn evaluate(&self, lqx: &[f64], lqy: &[f64]) -> Option<TiltPoint> {
        let ln_q: Vec<f64> = lqx
            .iter()
            .flat_map(|a| lqy.iter().map(move |b| a + b))
            .collect();
        // Constraint value along the tilt path: increasing in α for side P,
        // decreasing for side Q.
        let constraint = |alpha: f64| {
            let (_, dp, dq) = self.tilt(alpha, &ln_q);
            match self.side {
                Side::P => dq,
                Side::Q => dp,
            }
        };
        let alpha = match self.side {
            Side::P => {
                if constraint(1.0) <= self.e {
                    1.0
                } else if constraint(0.0) > self.e {
                    return None;
                } else {
                    let (mut lo, mut hi) = (0.0, 1.0);
                    for _ in 0..BISECTION_STEPS {
                        let mid = 0.5 * (lo + hi);
                        if constraint(mid) <= self.e {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    lo
                }
            }
            Side::Q => {
                if constraint(0.0) <= self.e {
                    0.0
                } else {
                    let (mut lo, mut hi) = (0.0, 1.0);
                    for _ in 0..BISECTION_STEPS {
                        let mid = 0.5 * (lo + hi);
                        if constraint(mid) <= self.e {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    hi
                }
            }
        };
        let (ln_r, dp, dq) = self.tilt(alpha, &ln_q);
        let r: Vec<f64> = ln_r.iter().map(|v| v.exp()).collect();
        let value = match self.side {
            Side::P => dp,
            Side::Q => dq,
        };
        if !value.is_finite() {
            return None;
        }
        let scale = match self.side {
            Side::P if alpha > 0.0 => (1.0 - alpha) / alpha,
            Side::P => return None,
            Side::Q => 1.0,
        };
        let qx: Vec<f64> = lqx.iter().map(|v| v.exp()).collect();
        let qy: Vec<f64> = lqy.iter().map(|v| v.exp()).collect();
        let mut grad = Vec::with_capacity(self.rows + self.cols);
        for x in 0..self.rows {
            let rx: f64 = r[x * self.cols..(x + 1) * self.cols].iter().sum();
            grad.push(-scale * (rx - qx[x]));
        }
        for y in 0..self.cols {
            let ry: f64 = (0..self.rows).map(|x| r[x * self.cols + y]).sum();
            grad.push(-scale * (ry - qy[y]));
        }
        Some(TiltPoint {
            value,
            r,
            qx,
            qy,
            grad,
        })
    }

    fn evaluate_theta(&self, theta: &[f64]) -> Option<TiltPoint> {
        let (tx, ty) = theta.split_at(self.rows);
        self.evaluate(&log_softmax(tx), &log_softmax(ty))
    }

    /// BFGS in softmax coordinates with a backtracking line search.
    pub fn polish(&self, qx: &[f64], qy: &[f64], max_iterations: usize) -> Option<TiltPoint> {
        let mut theta: Vec<f64> = qx.iter().chain(qy).map(|v| v.max(1e-300).ln()).collect();
        let mut cur = self.evaluate_theta(&theta)?;
        let n = theta.len();
        let mut h = identity(n);
        for _ in 0..max_iterations {
            let g = cur.grad.clone();
            if norm(&g) < 1e-15 {
                break;
            }
            let dir: Vec<f64> = mat_vec(&h, &g).iter().map(|v| -v).collect();
            let slope: f64 = dot(&dir, &g);
            let (dir, slope) = if slope < 0.0 {
                (dir, slope)
            } else {
                h = identity(n);
                let d: Vec<f64> = g.iter().map(|v| -v).collect();
                let s = dot(&d, &g);
                (d, s)
            };
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
                if let Some(pt) = self.evaluate_theta(&trial) {
                    if pt.value <= cur.value + 1e-4 * step * slope {
                        accepted = Some((trial, pt));
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some((next_theta, next)) = accepted else {
                break;
            };
            let s: Vec<f64> = next_theta.iter().zip(&theta).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = next.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-300 {
                bfgs_update(&mut h, &s, &y, sy);
            }
            let done = cur.value - next.value <= 0.0 && norm(&s) < 1e-16;
            theta = next_theta;
            cur = next;
            if done {
                break;
            }
        }
        Some(cur)
    }

    /// Polished multistart: the supplied starts, then random ones.
    pub fn multistart(
        &self,
        seeds: &[(Vec<f64>, Vec<f64>)],
        random_starts: usize,
        seed: u64,
        max_iterations: usize,
    ) -> Option<TiltPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut starts: Vec<(Vec<f64>, Vec<f64>)> = seeds.to_vec();
        for _ in 0..random_starts {
            let lx = random_log_simplex(&mut rng, self.rows);
            let ly = random_log_simplex(&mut rng, self.cols);
            starts.push((
                lx.iter().map(|v| v.exp()).collect(),
                ly.iter().map(|v| v.exp()).collect(),
            ));
        }
        starts
            .iter()
            .filter_map(|(qx, qy)| self.polish(qx, qy, max_iterations))
            .fold(None, |best: Option<TiltPoint>, pt| match best {
                Some(b) if b.value <= pt.value => Some(b),
                _ => Some(pt),
            })
    }
}

fn log_softmax(t: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(t);
    t.iter().map(|v| v - z).collect()
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Inverse-Hessian update `H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let n = s.len();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
