use errexp::exponents::ExponentPair;
use errexp::hypothesis::{
    emi_test, empirical_type, glrt_statistic, glrt_test, hoeffding_test, parse_samples, TestConfig,
    TestKind,
};
use errexp::{kl_divergence, mutual_information, EmpiricalType, FinitePmf};
use proptest::prelude::*;

fn null() -> FinitePmf {
    FinitePmf::joint(2, 3, vec![0.3, 0.1, 0.1, 0.05, 0.15, 0.3]).unwrap()
}

fn cfg(e_p: f64, e_q: f64, eps: f64) -> TestConfig {
    TestConfig::new(ExponentPair::new(e_p, e_q).unwrap(), eps, null()).unwrap()
}

fn counts() -> impl Strategy<Value = EmpiricalType> {
    prop::collection::vec(0u64..20, 6)
        .prop_filter("nonempty", |c| c.iter().sum::<u64>() > 0)
        .prop_map(|c| EmpiricalType::from_counts(2, 3, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn raising_thresholds_only_moves_toward_their_side(
        t in counts(), e_p in 0.0..0.5f64, e_q in 0.0..0.5f64, bump in 0.0..0.5f64,
    ) {
        let (lo, hi) = (cfg(e_p, e_q, 0.01), cfg(e_p, e_q + bump, 0.01));
        prop_assert!(emi_test(&t, &lo).unwrap().decision <= emi_test(&t, &hi).unwrap().decision);
        let hi_p = cfg(e_p + bump, e_q, 0.01);
        prop_assert!(hoeffding_test(&t, &lo).unwrap().decision >= hoeffding_test(&t, &hi_p).unwrap().decision);
        prop_assert!(glrt_test(&t, &lo).unwrap().decision <= glrt_test(&t, &hi).unwrap().decision);
    }

    #[test]
    fn glrt_sits_between_the_other_two(t in counts(), e_p in 0.0..0.5f64, e_q in 0.0..0.5f64, eps in 0.001..0.1f64) {
        let c = cfg(e_p, e_q, eps);
        let emi = emi_test(&t, &c).unwrap();
        let hoef = hoeffding_test(&t, &c).unwrap();
        if emi.decision == 0 && hoef.decision == 0 {
            prop_assert!(glrt_test(&t, &c).unwrap().decision == 0);
        }
        prop_assert_eq!(emi.statistic, mutual_information(&t.as_pmf()).unwrap());
        prop_assert_eq!(hoef.statistic, kl_divergence(&t.as_pmf(), &null()).unwrap());
    }

    #[test]
    fn verdicts_are_deterministic(t in counts()) {
        let c = cfg(0.1, 0.1, 0.01);
        for k in TestKind::ALL {
            prop_assert_eq!(k.run(&t, &c).unwrap(), k.run(&t, &c).unwrap());
        }
    }
}

#[test]
fn types_from_samples() {
    let t = empirical_type(2, 2, &[(0, 0)]).unwrap();
    assert_eq!((t.counts(), t.n()), (&[1, 0, 0, 0][..], 1));
    let t = empirical_type(2, 2, &[(0, 0), (1, 1), (0, 0)]).unwrap();
    assert_eq!((t.count(0, 0), t.count(1, 1), t.n()), (2, 1, 3));
    assert!(empirical_type(2, 2, &[(2, 0)]).is_err());
    assert_eq!(
        parse_samples("1 1\n# c\n\n2 3\n").unwrap(),
        vec![(0, 0), (1, 2)]
    );
}

#[test]
fn trivial_verdicts() {
    let c = cfg(0.1, 0.1, 0.01);
    let point = EmpiricalType::from_counts(2, 3, vec![0, 0, 0, 0, 7, 0]).unwrap();
    assert_eq!(emi_test(&point, &c).unwrap().decision, 1);
    // 0.15 = P(2, 2); ln 0.15 ≤ e_q − e_p = 0.
    assert_eq!(glrt_test(&point, &c).unwrap().decision, 1);

    let like_null = EmpiricalType::from_counts(2, 3, vec![6, 2, 2, 1, 3, 6]).unwrap();
    let h = hoeffding_test(&like_null, &c).unwrap();
    assert_eq!((h.decision, h.statistic), (0, 0.0));
    let g = glrt_statistic(&like_null, &null()).unwrap();
    let info = mutual_information(&null()).unwrap();
    assert!((g - info).abs() < 1e-15);
    assert!(info > 0.0);
    assert_eq!(glrt_test(&like_null, &c).unwrap().decision, 0);
}
