use errexp::exponents::ExponentPair;
use errexp::hypothesis::{TestConfig, TestKind};
use errexp::simulator::{run_plan, sample_iid, sanov_envelope, wilson, worst_alternative, SimPlan};
use errexp::{product_pmf, EmpiricalType, FinitePmf};
use proptest::prelude::*;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn example_plan(trials: u64, seed: u64) -> (SimPlan, TestConfig) {
    let p = errexp::example1::pmf().to_float();
    let alt = (
        FinitePmf::marginal(vec![0.5, 0.3, 0.2]).unwrap(),
        FinitePmf::marginal(vec![0.2, 0.2, 0.6]).unwrap(),
    );
    let cfg = TestConfig::new(ExponentPair::new(0.1, 0.1).unwrap(), 0.02, p.clone()).unwrap();
    (
        SimPlan::new(p, vec![alt], vec![10, 40], trials, seed).unwrap(),
        cfg,
    )
}

#[test]
fn thread_count_does_not_change_results() {
    let (plan, cfg) = example_plan(3000, 21);
    let one = in_pool(1, || run_plan(&plan, &cfg, &TestKind::ALL).unwrap());
    let four = in_pool(4, || run_plan(&plan, &cfg, &TestKind::ALL).unwrap());
    assert_eq!(one, four);
}

#[test]
fn example_samples_fit_the_null() {
    // Chi-square statistic with 8 degrees of freedom; the survival function
    // for even degrees is e^{-x/2} Σ_{i<4} (x/2)^i / i!.
    let p = errexp::example1::pmf().to_float();
    let n = 1_000_000;
    let t = EmpiricalType::from_samples(3, 3, &sample_iid(&p, n, 17).unwrap()).unwrap();
    let x: f64 = t
        .counts()
        .iter()
        .zip(p.probs())
        .map(|(&c, &q)| {
            let e = q * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let h = x / 2.0;
    let p_value = (-h).exp() * (1.0 + h + h * h / 2.0 + h * h * h / 6.0);
    assert!(p_value > 1e-6, "chi-square {x}, p-value {p_value}");
}

#[test]
fn independent_null_rejects_nothing_far_away() {
    let qx = FinitePmf::marginal(vec![0.5, 0.5]).unwrap();
    let p = product_pmf(&qx, &qx).unwrap();
    let cfg = TestConfig::new(ExponentPair::new(0.05, 0.05).unwrap(), 0.01, p.clone()).unwrap();
    let alt = (
        FinitePmf::marginal(vec![0.9, 0.1]).unwrap(),
        FinitePmf::marginal(vec![0.2, 0.8]).unwrap(),
    );
    let plan = SimPlan::new(p, vec![alt], vec![200], 2000, 3).unwrap();
    let curve = run_plan(&plan, &cfg, &[TestKind::Emi]).unwrap();
    let type_two = curve
        .points
        .iter()
        .find(|pt| pt.alternative == Some(0))
        .unwrap();
    assert!(type_two.estimate < 0.01, "{type_two:?}");
}

#[test]
fn worst_alternative_beats_the_null_marginals() {
    let (plan, cfg) = example_plan(400, 5);
    let n = 30;
    let ((qx, qy), worst) = worst_alternative(&cfg, TestKind::Emi, n, 0.25, 400, 8).unwrap();
    assert_eq!((qx.len(), qy.len()), (3, 3));
    let base = SimPlan::new(
        plan.null_pmf.clone(),
        vec![plan.null_marginals().unwrap()],
        vec![n],
        400,
        8,
    )
    .unwrap();
    let curve = run_plan(&base, &cfg, &[TestKind::Emi]).unwrap();
    let baseline = curve
        .points
        .iter()
        .find(|pt| pt.alternative == Some(0))
        .unwrap()
        .estimate;
    assert!(worst >= baseline, "{worst} < {baseline}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wilson_interval_covers_the_estimate(k in 0u64..1000, extra in 0u64..1000) {
        let n = k + extra + 1;
        let (c, h) = wilson(k, n);
        let p = k as f64 / n as f64;
        prop_assert!(c - h <= p + 1e-12 && p <= c + h + 1e-12);
        prop_assert!(c - h >= -1e-12 && c + h <= 1.0 + 1e-12);
    }

    #[test]
    fn envelope_is_monotone_in_the_exponent(n in 1usize..500, e in 0.0..1.0f64, d in 0.0..1.0f64) {
        prop_assert!(sanov_envelope(n, 9, e + d, 0.01) <= sanov_envelope(n, 9, e, 0.01));
    }

    #[test]
    fn seeded_plans_repeat(seed in 0u64..1000) {
        let (plan, cfg) = example_plan(50, seed);
        prop_assert_eq!(
            run_plan(&plan, &cfg, &[TestKind::Hoeffding]).unwrap(),
            run_plan(&plan, &cfg, &[TestKind::Hoeffding]).unwrap()
        );
    }
}
