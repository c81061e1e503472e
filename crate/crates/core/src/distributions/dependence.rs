use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::divergence::mi_slice;
use super::{marginal_vectors, FinitePmf, RenyiOrder};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct JAlphaOptions {
    pub starts: usize,
    pub seed: u64,
    /// Stop once one sweep improves `log Σ P^α (Q_X Q_Y)^{1−α}` by less than this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for JAlphaOptions {
    fn default() -> Self {
        Self {
            starts: 16,
            seed: 0x4a41_4c50,
            tolerance: 1e-13,
            max_iterations: 10_000,
        }
    }
}

/// Minimal Rényi divergence of order `α ∈ (0, 1]` from `p` to a product PMF.
pub fn j_alpha(p: &FinitePmf, order: RenyiOrder, starts: usize) -> Result<f64> {
    let opts = JAlphaOptions {
        starts,
        ..JAlphaOptions::default()
    };
    j_alpha_with(p, order, &opts)
}

pub fn j_alpha_with(p: &FinitePmf, order: RenyiOrder, opts: &JAlphaOptions) -> Result<f64> {
    let (rows, cols) = p.require_joint()?;
    if opts.starts == 0 {
        return Err(Error::invalid("j_alpha needs at least one start"));
    }
    match order {
        RenyiOrder::One => Ok(mi_slice(p.probs(), rows, cols)),
        RenyiOrder::Alpha(alpha) if alpha > 0.0 && alpha < 1.0 => {
            Ok(JAlphaSolver::new(p.probs(), rows, cols)
                .solve(alpha, opts)
                .value)
        }
        RenyiOrder::Alpha(alpha) => Err(Error::Precondition(format!(
            "j_alpha is defined here for orders in (0, 1], got {alpha}"
        ))),
    }
}

pub(crate) struct JAlphaSolution {
    pub value: f64,
}

/// Alternating blockwise maximization of `Σ P^α Q_X^{1−α} Q_Y^{1−α}` in the
/// log domain. Fixing `Q_Y`, the maximizing `Q_X(x)` is proportional to
/// `[Σ_y P(x,y)^α Q_Y(y)^{1−α}]^{1/α}`; symmetrically for `Q_Y`.
pub(crate) struct JAlphaSolver<'a> {
    p: &'a [f64],
    log_p: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl<'a> JAlphaSolver<'a> {
    pub fn new(p: &'a [f64], rows: usize, cols: usize) -> Self {
        let log_p = p.iter().map(|v| v.ln()).collect();
        Self {
            p,
            log_p,
            rows,
            cols,
        }
    }

    pub fn solve(&self, alpha: f64, opts: &JAlphaOptions) -> JAlphaSolution {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let (mx, my) = marginal_vectors(self.p, self.rows, self.cols);
        let mut best = self.climb(alpha, ln_vec(&mx), ln_vec(&my), opts);
        for _ in 1..opts.starts {
            let lqx = random_log_simplex(&mut rng, self.rows);
            let lqy = random_log_simplex(&mut rng, self.cols);
            let cand = self.climb(alpha, lqx, lqy, opts);
            if cand.0 > best.0 {
                best = cand;
            }
        }
        JAlphaSolution {
            value: (best.0 / (alpha - 1.0)).max(0.0),
        }
    }

    /// Runs the alternating updates from one start; returns the final log-objective.
    fn climb(
        &self,
        alpha: f64,
        mut lqx: Vec<f64>,
        mut lqy: Vec<f64>,
        opts: &JAlphaOptions,
    ) -> (f64, Vec<f64>, Vec<f64>) {
        let (rows, cols) = (self.rows, self.cols);
        let mut log_s = f64::NEG_INFINITY;
        let mut buf = Vec::with_capacity(rows.max(cols));
        for _ in 0..opts.max_iterations {
            // update Q_X
            let mut la = Vec::with_capacity(rows);
            for x in 0..rows {
                buf.clear();
                buf.extend(
                    (0..cols).map(|y| alpha * self.log_p[x * cols + y] + (1.0 - alpha) * lqy[y]),
                );
                la.push(log_sum_exp(&buf) / alpha);
            }
            let norm = log_sum_exp(&la);
            for x in 0..rows {
                lqx[x] = la[x] - norm;
            }
            // update Q_Y
            let mut lb = Vec::with_capacity(cols);
            for y in 0..cols {
                buf.clear();
                buf.extend(
                    (0..rows).map(|x| alpha * self.log_p[x * cols + y] + (1.0 - alpha) * lqx[x]),
                );
                lb.push(log_sum_exp(&buf) / alpha);
            }
            let norm = log_sum_exp(&lb);
            for y in 0..cols {
                lqy[y] = lb[y] - norm;
            }
            let next = alpha * norm;
            let improved = next - log_s;
            log_s = next;
            if improved < opts.tolerance {
                break;
            }
        }
        (log_s, lqx, lqy)
    }
}

fn ln_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.ln()).collect()
}

pub(crate) fn random_log_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n)
        .map(|_| -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln())
        .collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| (v / total).ln()).collect()
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{mutual_information, product_pmf, renyi_divergence};

    #[test]
    fn product_has_zero_dependence() {
        let qx = FinitePmf::marginal(vec![0.2, 0.3, 0.5]).unwrap();
        let qy = FinitePmf::marginal(vec![0.6, 0.4]).unwrap();
        let p = product_pmf(&qx, &qy).unwrap();
        for a in [0.1, 0.5, 0.9] {
            assert!(j_alpha(&p, RenyiOrder::new(a).unwrap(), 4).unwrap() < 1e-12);
        }
    }

    #[test]
    fn order_one_is_mutual_information() {
        let p = FinitePmf::joint(2, 2, vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        assert_eq!(
            j_alpha(&p, RenyiOrder::One, 1).unwrap(),
            mutual_information(&p).unwrap()
        );
    }

    #[test]
    fn below_divergence_to_own_marginals() {
        let p = FinitePmf::joint(2, 3, vec![0.3, 0.05, 0.15, 0.1, 0.25, 0.15]).unwrap();
        let (mx, my) = crate::distributions::marginals(&p).unwrap();
        let prod = product_pmf(&mx, &my).unwrap();
        for a in [0.05, 0.3, 0.7, 0.99] {
            let order = RenyiOrder::new(a).unwrap();
            let j = j_alpha(&p, order, 8).unwrap();
            assert!(j <= renyi_divergence(&p, &prod, order).unwrap() + 1e-14);
        }
    }

    #[test]
    fn rejects_orders_above_one() {
        let p = FinitePmf::joint(2, 2, vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        assert!(j_alpha(&p, RenyiOrder::new(1.5).unwrap(), 1).is_err());
    }
}
