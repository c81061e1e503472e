//! Monte Carlo error rates of the tests, set against the method-of-types
//! envelopes `(n+1)^{|X×Y|} e^{−n(E+ε)}`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{product_pmf, EmpiricalType, FinitePmf, Shape};
use crate::error::{Error, Result};
use crate::hypothesis::{TestConfig, TestKind};

/// Two-sided 95% normal quantile used for the Wilson intervals.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Default marginal grid step for [`worst_alternative`].
pub const DEFAULT_GRID_STEP: f64 = 0.05;

/// Inverse-CDF sampler over the flattened alphabet.
#[derive(Clone, Debug)]
pub struct Sampler {
    cdf: Vec<f64>,
    last: usize,
    rows: usize,
    cols: usize,
}

impl Sampler {
    pub fn new(p: &FinitePmf) -> Result<Self> {
        let (rows, cols) = p.require_joint()?;
        let mut acc = 0.0;
        let cdf: Vec<f64> = p
            .probs()
            .iter()
            .map(|&v| {
                acc += v;
                acc
            })
            .collect();
        let last = p
            .probs()
            .iter()
            .rposition(|&v| v > 0.0)
            .expect("a PMF has mass");
        Ok(Self {
            cdf,
            last,
            rows,
            cols,
        })
    }

    /// Flat index of one draw. Cells of zero mass are never returned.
    pub fn draw(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.last)
    }

    pub fn draw_type(&self, n: usize, rng: &mut impl Rng) -> EmpiricalType {
        let mut counts = vec![0u64; self.cdf.len()];
        for _ in 0..n {
            counts[self.draw(rng)] += 1;
        }
        EmpiricalType::from_counts(self.rows, self.cols, counts).expect("n ≥ 1")
    }
}

/// Generator for one `(source, n-index, trial)` triple. Streams never
/// overlap, so the result does not depend on scheduling.
fn stream_rng(seed: u64, source: u64, n_index: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((source << 40) | (n_index << 32) | trial);
    rng
}

/// `n` IID draws from `p` as zero-based `(x, y)` pairs.
pub fn sample_iid(p: &FinitePmf, n: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let s = Sampler::new(p)?;
    let mut rng = stream_rng(seed, 0, 0, 0);
    Ok((0..n)
        .map(|_| {
            let k = s.draw(&mut rng);
            (k / s.cols, k % s.cols)
        })
        .collect())
}

/// `(n+1)^alphabet · e^{−n(exponent+ε)}`, which can exceed one.
pub fn sanov_envelope(n: usize, alphabet_size: usize, exponent: f64, epsilon: f64) -> f64 {
    let n = n as f64;
    (alphabet_size as f64 * (n + 1.0).ln() - n * (exponent + epsilon)).exp()
}

/// Wilson score interval `(center, half_width)` for `k` successes in `n`.
pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (center, half)
}

#[derive(Clone, Debug)]
pub struct SimPlan {
    pub null_pmf: FinitePmf,
    pub alternatives: Vec<(FinitePmf, FinitePmf)>,
    pub n_grid: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
}

impl SimPlan {
    pub fn new(
        null_pmf: FinitePmf,
        alternatives: Vec<(FinitePmf, FinitePmf)>,
        n_grid: Vec<usize>,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        let (rows, cols) = null_pmf.require_joint()?;
        if trials == 0 || trials >= 1 << 32 {
            return Err(Error::invalid("trials must be in 1..2^32"));
        }
        if n_grid.is_empty() || n_grid.contains(&0) || n_grid.len() > 255 {
            return Err(Error::invalid(
                "sample sizes must be positive (at most 255 of them)",
            ));
        }
        for (qx, qy) in &alternatives {
            if qx.shape() != Shape::Marginal(rows) || qy.shape() != Shape::Marginal(cols) {
                return Err(Error::ShapeMismatch {
                    left: format!("({}, {})", qx.shape(), qy.shape()),
                    right: null_pmf.shape().to_string(),
                });
            }
        }
        Ok(Self {
            null_pmf,
            alternatives,
            n_grid,
            trials,
            seed,
        })
    }

    /// The null's own marginals as the alternative.
    pub fn null_marginals(&self) -> Result<(FinitePmf, FinitePmf)> {
        crate::distributions::marginals(&self.null_pmf)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorKind {
    /// Verdict 1 under the null.
    TypeOne,
    /// Verdict 0 under a product alternative.
    TypeTwo,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::TypeOne => "I",
            ErrorKind::TypeTwo => "II",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub test: TestKind,
    pub n: usize,
    /// Index into the plan's alternatives; `None` for the null.
    pub alternative: Option<usize>,
    pub kind: ErrorKind,
    pub errors: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_half_width: f64,
    pub envelope: f64,
    /// Fewer than ten errors were seen.
    pub censored: bool,
}

impl CurvePoint {
    /// Whether `estimate − 3·half_width` stays within the envelope.
    pub fn within_envelope(&self) -> bool {
        self.estimate - 3.0 * self.ci_half_width <= self.envelope
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub points: Vec<CurvePoint>,
    pub trials: u64,
}

impl ErrorCurve {
    /// Tab-separated table with a header row.
    pub fn to_table(&self) -> String {
        let mut out =
            String::from("test\tn\talternative\ttype\testimate\tci_half_width\tenvelope\n");
        for p in &self.points {
            let alt = p
                .alternative
                .map_or_else(|| "null".to_string(), |k| k.to_string());
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.6e}\t{:.6e}\t{:.6e}{}",
                p.test.name(),
                p.n,
                alt,
                p.kind.name(),
                p.estimate,
                p.ci_half_width,
                p.envelope,
                if p.censored { "\tcensored" } else { "" }
            );
        }
        out
    }
}

/// Envelope for `test`; the likelihood-ratio test pays a union bound.
fn envelope(test: TestKind, kind: ErrorKind, n: usize, cells: usize, cfg: &TestConfig) -> f64 {
    let exponent = match kind {
        ErrorKind::TypeOne => cfg.pair.e_p,
        ErrorKind::TypeTwo => cfg.pair.e_q,
    };
    let base = sanov_envelope(n, cells, exponent, cfg.epsilon);
    if test == TestKind::Glrt {
        2.0 * base
    } else {
        base
    }
}

/// Counts, per test, how many of `trials` types drawn from `sampler` got
/// verdict `target`.
fn count_verdicts(
    sampler: &Sampler,
    cfg: &TestConfig,
    tests: &[TestKind],
    target: u8,
    n: usize,
    stream: (u64, u64, u64),
    trials: u64,
) -> Result<Vec<u64>> {
    let (seed, source, n_index) = stream;
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, source, n_index, trial);
            let t = sampler.draw_type(n, &mut rng);
            tests
                .iter()
                .map(|k| k.run(&t, cfg).map(|v| u64::from(v.decision == target)))
                .collect::<Result<Vec<u64>>>()
        })
        .try_reduce(
            || vec![0; tests.len()],
            |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()),
        )
}

fn point(
    test: TestKind,
    n: usize,
    alternative: Option<usize>,
    kind: ErrorKind,
    errors: u64,
    trials: u64,
    env: f64,
) -> CurvePoint {
    let (_, half) = wilson(errors, trials);
    CurvePoint {
        test,
        n,
        alternative,
        kind,
        errors,
        trials,
        estimate: errors as f64 / trials as f64,
        ci_half_width: half,
        envelope: env,
        censored: errors < 10,
    }
}

/// Type-I rates under the null and type-II rates under each alternative,
/// for every test in `tests` and every `n` in the plan. All tests see the
/// same samples.
pub fn run_plan(plan: &SimPlan, cfg: &TestConfig, tests: &[TestKind]) -> Result<ErrorCurve> {
    if cfg.reference.shape() != plan.null_pmf.shape() {
        return Err(Error::ShapeMismatch {
            left: cfg.reference.shape().to_string(),
            right: plan.null_pmf.shape().to_string(),
        });
    }
    let cells = plan.null_pmf.len();
    let null = Sampler::new(&plan.null_pmf)?;
    let alts = plan
        .alternatives
        .iter()
        .map(|(qx, qy)| Sampler::new(&product_pmf(qx, qy)?))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::new();
    for (ni, &n) in plan.n_grid.iter().enumerate() {
        let ni = ni as u64;
        let ones = count_verdicts(&null, cfg, tests, 1, n, (plan.seed, 0, ni), plan.trials)?;
        for (&test, &k) in tests.iter().zip(&ones) {
            let env = envelope(test, ErrorKind::TypeOne, n, cells, cfg);
            points.push(point(
                test,
                n,
                None,
                ErrorKind::TypeOne,
                k,
                plan.trials,
                env,
            ));
        }
        for (a, sampler) in alts.iter().enumerate() {
            let zeros = count_verdicts(
                sampler,
                cfg,
                tests,
                0,
                n,
                (plan.seed, a as u64 + 1, ni),
                plan.trials,
            )?;
            for (&test, &k) in tests.iter().zip(&zeros) {
                let env = envelope(test, ErrorKind::TypeTwo, n, cells, cfg);
                points.push(point(
                    test,
                    n,
                    Some(a),
                    ErrorKind::TypeTwo,
                    k,
                    plan.trials,
                    env,
                ));
            }
        }
    }
    Ok(ErrorCurve {
        points,
        trials: plan.trials,
    })
}

/// Points of the `m`-simplex whose coordinates are multiples of `step`
/// (the last coordinate absorbs the remainder).
fn simplex_grid(m: usize, step: f64) -> Vec<Vec<f64>> {
    let k = (1.0 / step).floor() as usize;
    let mut out = Vec::new();
    let mut cur = vec![0usize; m];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, step: f64, out: &mut Vec<Vec<f64>>) {
        let m = cur.len();
        if i + 1 == m {
            cur[i] = left;
            let head: f64 = cur[..m - 1].iter().map(|&c| c as f64 * step).sum();
            let mut v: Vec<f64> = cur[..m - 1].iter().map(|&c| c as f64 * step).collect();
            v.push((1.0 - head).max(0.0));
            out.push(v);
            return;
        }
        for c in 0..=left {
            cur[i] = c;
            rec(i + 1, left - c, cur, step, out);
        }
    }
    rec(0, k, &mut cur, step, &mut out);
    out
}

/// Grid search over product alternatives for the largest estimated type-II
/// error of `test` at sample size `n`.
pub fn worst_alternative(
    cfg: &TestConfig,
    test: TestKind,
    n: usize,
    grid_step: f64,
    trials: u64,
    seed: u64,
) -> Result<((FinitePmf, FinitePmf), f64)> {
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::invalid(format!(
            "grid step must be in (0, 0.5], got {grid_step}"
        )));
    }
    if n == 0 || trials == 0 {
        return Err(Error::invalid("n and trials must be positive"));
    }
    let (rows, cols) = cfg.reference.require_joint()?;
    let gx = simplex_grid(rows, grid_step);
    let gy = simplex_grid(cols, grid_step);
    let mut best: Option<((Vec<f64>, Vec<f64>), u64)> = None;
    for (i, qx) in gx.iter().enumerate() {
        for (j, qy) in gy.iter().enumerate() {
            let joint: Vec<f64> = qx
                .iter()
                .flat_map(|a| qy.iter().map(move |b| a * b))
                .collect();
            let sampler = Sampler::new(&FinitePmf::joint(rows, cols, joint)?)?;
            let source = (i * gy.len() + j) as u64 + 1;
            let k = count_verdicts(&sampler, cfg, &[test], 0, n, (seed, source, 0), trials)?[0];
            if best.as_ref().is_none_or(|(_, b)| k > *b) {
                best = Some(((qx.clone(), qy.clone()), k));
            }
        }
    }
    let ((qx, qy), k) = best.expect("grids are nonempty");
    Ok((
        (FinitePmf::marginal(qx)?, FinitePmf::marginal(qy)?),
        k as f64 / trials as f64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::ExponentPair;

    #[test]
    fn point_mass_sampling() {
        let p = FinitePmf::point_mass(Shape::Joint { rows: 2, cols: 3 }, 4).unwrap();
        assert_eq!(sample_iid(&p, 5, 1).unwrap(), vec![(1, 1); 5]);
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = crate::example1::pmf().to_float();
        assert_eq!(
            sample_iid(&p, 100, 9).unwrap(),
            sample_iid(&p, 100, 9).unwrap()
        );
        assert_ne!(
            sample_iid(&p, 100, 9).unwrap(),
            sample_iid(&p, 100, 10).unwrap()
        );
    }

    #[test]
    fn uniform_frequencies() {
        let p = FinitePmf::joint(2, 2, vec![0.25; 4]).unwrap();
        let s = sample_iid(&p, 400_000, 3).unwrap();
        let t = EmpiricalType::from_samples(2, 2, &s).unwrap();
        for f in t.frequencies() {
            assert!((f - 0.25).abs() < 0.005, "{f}");
        }
    }

    #[test]
    fn envelope_arithmetic() {
        let v = sanov_envelope(10, 9, 0.4, 0.1);
        assert!((v - 11f64.powi(9) * (-5f64).exp()).abs() / v < 1e-12);
        assert!((v - 1.589e7).abs() < 1e4);
        assert!((sanov_envelope(7, 4, 0.0, 0.0) - 8f64.powi(4)).abs() < 1e-9);
    }

    #[test]
    fn envelope_drops_below_one_at_the_root() {
        let (a, e) = (9usize, 0.5);
        let g = |n: f64| a as f64 * (n + 1.0).ln() - n * e;
        let (mut lo, mut hi) = (10.0, 1e4);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let first = hi.ceil() as usize;
        assert!(sanov_envelope(first, a, e, 0.0) < 1.0);
        assert!(sanov_envelope(first - 1, a, e, 0.0) >= 1.0);
    }

    #[test]
    fn wilson_limits() {
        let (c, h) = wilson(0, 100);
        assert!(c > 0.0 && c - h < 1e-15);
        let (c, h) = wilson(50, 100);
        assert!((c - 0.5).abs() < 1e-15 && (h - 0.0962).abs() < 1e-3);
    }

    fn small_cfg() -> (FinitePmf, TestConfig) {
        let p = FinitePmf::joint(2, 2, vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        let cfg = TestConfig::new(ExponentPair::new(0.05, 0.05).unwrap(), 0.01, p.clone()).unwrap();
        (p, cfg)
    }

    #[test]
    fn single_trial_is_zero_or_one() {
        let (p, cfg) = small_cfg();
        let m = crate::distributions::marginals(&p).unwrap();
        let plan = SimPlan::new(p, vec![m], vec![5, 20], 1, 4).unwrap();
        let curve = run_plan(&plan, &cfg, &TestKind::ALL).unwrap();
        assert_eq!(curve.points.len(), 2 * 3 * 2);
        assert!(curve
            .points
            .iter()
            .all(|p| p.estimate == 0.0 || p.estimate == 1.0));
    }

    #[test]
    fn plan_is_reproducible_and_type_two_decays() {
        let (p, cfg) = small_cfg();
        let m = crate::distributions::marginals(&p).unwrap();
        let plan = SimPlan::new(p, vec![m], vec![10, 100, 400], 2000, 11).unwrap();
        let a = run_plan(&plan, &cfg, &[TestKind::Emi]).unwrap();
        let b = run_plan(&plan, &cfg, &[TestKind::Emi]).unwrap();
        assert_eq!(a, b);
        let t2: Vec<f64> = a
            .points
            .iter()
            .filter(|p| p.kind == ErrorKind::TypeTwo)
            .map(|p| p.estimate)
            .collect();
        assert!(t2[2] < t2[0], "{t2:?}");
        assert!(a.to_table().starts_with("test\tn\talternative\ttype"));
    }

    #[test]
    fn one_point_grid() {
        let p = FinitePmf::joint(1, 1, vec![1.0]).unwrap();
        let cfg = TestConfig::new(ExponentPair::new(0.1, 0.1).unwrap(), 0.1, p).unwrap();
        let ((qx, qy), _) = worst_alternative(&cfg, TestKind::Hoeffding, 5, 0.5, 10, 1).unwrap();
        assert_eq!((qx.probs(), qy.probs()), (&[1.0][..], &[1.0][..]));
    }

    #[test]
    fn grid_counts() {
        assert_eq!(simplex_grid(3, 0.05).len(), 231);
        assert_eq!(simplex_grid(2, 0.5).len(), 3);
    }
}
