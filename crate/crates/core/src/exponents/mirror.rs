//! Exponentiated-gradient descent on the joint simplex with an exact penalty.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distributions::dependence::{log_sum_exp, random_log_simplex};

#[derive(Clone, Debug)]
pub struct MirrorOptions {
    pub starts: usize,
    pub seed: u64,
    /// Iterations per penalty level.
    pub iterations: usize,
    /// Penalty weights run `1, 2, 4, …, 2^max_doublings`.
    pub max_doublings: u32,
    pub step: f64,
}

impl Default for MirrorOptions {
    fn default() -> Self {
        Self {
            starts: 32,
            seed: 0x4d44_4553,
            iterations: 150,
            max_doublings: 10,
            step: 0.5,
        }
    }
}

/// A smooth objective and constraint on the simplex, both given with their
/// gradients (up to an additive constant) in terms of `ln R`.
pub(crate) trait Penalized {
    fn objective(&self, ln_r: &[f64]) -> (f64, Vec<f64>);
    fn constraint(&self, ln_r: &[f64]) -> (f64, Vec<f64>);
    fn bound(&self) -> f64;
}

pub(crate) struct MirrorResult {
    pub ln_r: Vec<f64>,
    pub objective: f64,
    pub constraint: f64,
}

/// Minimizes `objective + ρ·max(0, constraint − bound)` from several starts
/// with `ρ` doubling; keeps the best nearly feasible iterate of each run.
pub(crate) fn minimize<F: Penalized>(
    f: &F,
    support: &[bool],
    seeds: &[Vec<f64>],
    opts: &MirrorOptions,
) -> Vec<MirrorResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = support.len();
    let mut starts: Vec<Vec<f64>> = seeds.to_vec();
    while starts.len() < opts.starts.max(1) {
        starts.push(random_log_simplex(&mut rng, n));
    }
    starts
        .into_iter()
        .map(|mut ln_r| {
            restrict(&mut ln_r, support);
            run(f, ln_r, support, opts)
        })
        .collect()
}

fn restrict(ln_r: &mut [f64], support: &[bool]) {
    for (v, &on) in ln_r.iter_mut().zip(support) {
        if !on {
            *v = f64::NEG_INFINITY;
        }
    }
    let z = log_sum_exp(ln_r);
    for v in ln_r.iter_mut() {
        *v -= z;
    }
}

fn run<F: Penalized>(
    f: &F,
    mut ln_r: Vec<f64>,
    support: &[bool],
    opts: &MirrorOptions,
) -> MirrorResult {
    let slack = 1e-12;
    let mut best: Option<MirrorResult> = None;
    let mut fallback: Option<(f64, MirrorResult)> = None;
    let mut consider = |ln_r: &[f64], obj: f64, con: f64| {
        let violation = (con - f.bound()).max(0.0);
        if violation <= slack {
            if best.as_ref().is_none_or(|b| obj < b.objective) {
                best = Some(MirrorResult {
                    ln_r: ln_r.to_vec(),
                    objective: obj,
                    constraint: con,
                });
            }
        } else if fallback.as_ref().is_none_or(|(v, _)| violation < *v) {
            fallback = Some((
                violation,
                MirrorResult {
                    ln_r: ln_r.to_vec(),
                    objective: obj,
                    constraint: con,
                },
            ));
        }
    };
    for level in 0..=opts.max_doublings {
        let rho = f64::from(1u32 << level);
        for t in 0..opts.iterations {
            let (obj, g_obj) = f.objective(&ln_r);
            let (con, g_con) = f.constraint(&ln_r);
            consider(&ln_r, obj, con);
            let active = con > f.bound();
            let eta = opts.step / (1.0 + if active { rho } else { 1.0 }) / ((t + 1) as f64).sqrt();
            for (i, v) in ln_r.iter_mut().enumerate() {
                if !support[i] {
                    continue;
                }
                let g = g_obj[i] + if active { rho * g_con[i] } else { 0.0 };
                *v -= eta * g;
            }
            restrict(&mut ln_r, support);
        }
    }
    let (obj, _) = f.objective(&ln_r);
    let (con, _) = f.constraint(&ln_r);
    consider(&ln_r, obj, con);
    best.or(fallback.map(|(_, r)| r))
        .expect("at least one iterate")
}
