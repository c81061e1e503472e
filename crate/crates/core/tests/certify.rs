use errexp::certify::certificate::{format_certificate, parse_certificate};
use errexp::certify::{
    box_extreme_points, branch_and_bound, certify_upper, choose_parameters, d_lower, holder_bound,
    nonconvexity_certificate, verify_upper_bound, BoundParams, Certificate, Interval, ProductBox,
    SearchConfig, SearchOutcome,
};
use errexp::exponents::{ep_biconjugate, ep_of_eq};
use errexp::rational::{dyadic, from_f64_exact, parse_rational, to_f64, Rational};
use errexp::{renyi_divergence, FinitePmf, RenyiOrder, Shape};
use proptest::prelude::*;

fn rat(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn rational_pmf(rows: usize, cols: usize, masses: &[&str]) -> FinitePmf {
    FinitePmf::from_rationals(
        Shape::Joint { rows, cols },
        masses.iter().map(|s| rat(s)).collect(),
    )
    .unwrap()
}

fn two_by_two() -> FinitePmf {
    rational_pmf(2, 2, &["2/5", "1/10", "1/10", "2/5"])
}

/// `sup_α ((1−α)/α)(D_α(P‖Q) − e)`: a grid on `(0, 1)`, then golden-section
/// refinement around the best grid point.
fn float_sup(p: &FinitePmf, qx: &[f64], qy: &[f64], e: f64) -> f64 {
    const N: usize = 2000;
    let q: Vec<f64> = qx
        .iter()
        .flat_map(|a| qy.iter().map(move |b| a * b))
        .collect();
    let q = FinitePmf::joint(qx.len(), qy.len(), q).unwrap();
    let f = |a: f64| {
        (1.0 - a) / a * (renyi_divergence(p, &q, RenyiOrder::new(a).unwrap()).unwrap() - e)
    };
    let (k, best) = (1..N)
        .map(|k| (k, f(k as f64 / N as f64)))
        .fold((0, 0.0), |m, c| if c.1 > m.1 { c } else { m });
    if k == 0 {
        return best;
    }
    let (mut lo, mut hi) = (
        (k as f64 - 1.0) / N as f64 + 1e-12,
        (k as f64 + 1.0) / N as f64 - 1e-12,
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (a, b) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    best.max(f(0.5 * (lo + hi)))
}

#[test]
fn interval_examples() {
    let one = Interval::point(1.0);
    assert_eq!(one.add(&Interval::point(2.0)), Interval::point(3.0));
    assert_eq!(one.ln().unwrap(), Interval::point(0.0));
    let prod = Interval::new(1.0, 2.0)
        .unwrap()
        .mul(&Interval::new(3.0, 4.0).unwrap());
    assert!(prod.lo() <= 3.0 && prod.hi() >= 8.0);
    assert!(Interval::new(-1.0, 1.0).unwrap().ln().is_err());
    assert!(one.div(&Interval::new(-1.0, 1.0).unwrap()).is_err());
}

#[test]
fn extreme_point_examples() {
    let v = |s: &[&str]| s.iter().map(|x| rat(x)).collect::<Vec<_>>();
    let mut got = box_extreme_points(&v(&["1/5"; 3]), &v(&["3/5"; 3])).unwrap();
    got.sort();
    let mut want = vec![
        v(&["3/5", "1/5", "1/5"]),
        v(&["1/5", "3/5", "1/5"]),
        v(&["1/5", "1/5", "3/5"]),
    ];
    want.sort();
    assert_eq!(got, want);

    let mut got = box_extreme_points(&v(&["0"; 3]), &v(&["1/2", "1", "1"])).unwrap();
    got.sort();
    let mut want = vec![
        v(&["1/2", "1/2", "0"]),
        v(&["1/2", "0", "1/2"]),
        v(&["0", "1", "0"]),
        v(&["0", "0", "1"]),
    ];
    want.sort();
    assert_eq!(got, want);
}

#[test]
fn d_lower_examples() {
    let full = ProductBox::full(3, 3);
    let zero = BoundParams::new(0.5, vec![0.0; 9]).unwrap();
    assert_eq!(d_lower(&full, &zero).unwrap(), Interval::point(0.0));
    for c in [0.25, 1.0, 3.5] {
        let flat = BoundParams::new(0.375, vec![c; 9]).unwrap();
        let d = d_lower(&full, &flat).unwrap();
        assert!(d.contains(c) && d.width() < 1e-12, "{d:?}");
    }
}

#[test]
fn zero_beta_costs_only_the_penalty() {
    let p = errexp::example1::pmf();
    let e_q = errexp::example1::eq_mid();
    for alpha in [0.25, 0.5, 0.875] {
        let v = holder_bound(
            &p,
            &ProductBox::full(3, 3),
            &BoundParams::new(alpha, vec![0.0; 9]).unwrap(),
            &e_q,
        )
        .unwrap();
        let want = -(1.0 - alpha) / alpha * to_f64(&e_q);
        assert!(
            !v.vacuous && v.bound.contains(want) && v.bound.width() < 1e-13,
            "{v:?}"
        );
    }
}

fn dyadic_box() -> impl Strategy<Value = ProductBox> {
    let side = prop::collection::vec((0u32..64, 1u32..32), 3).prop_map(|v| {
        let l: Vec<f64> = v.iter().map(|&(a, _)| a as f64 / 128.0).collect();
        let u: Vec<f64> = v
            .iter()
            .map(|&(a, w)| ((a + w) as f64 / 128.0).min(1.0))
            .collect();
        (l, u)
    });
    (side.clone(), side)
        .prop_map(|((lx, ux), (ly, uy))| ProductBox::new(lx, ux, ly, uy).unwrap())
        .prop_filter("meets the simplex", |b| !b.is_empty())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The certified bound never exceeds the objective's supremum at points
    /// inside the box (extreme points included).
    #[test]
    fn bound_stays_below_the_objective(
        b in dyadic_box(),
        alpha_k in 1u32..64,
        beta in prop::collection::vec(0u32..64, 9),
    ) {
        let p = errexp::example1::pmf();
        let e_q = errexp::example1::eq_mid();
        let params = BoundParams::new(alpha_k as f64 / 64.0, beta.iter().map(|&v| v as f64 / 32.0).collect()).unwrap();
        let v = holder_bound(&p, &b, &params, &e_q).unwrap();
        let pf = p.to_float();
        let (xs, ys) = b.extreme_points_f64();
        let mut points: Vec<(Vec<f64>, Vec<f64>)> = vec![b.center().unwrap()];
        for x in &xs {
            for y in &ys {
                points.push((x.clone(), y.clone()));
            }
        }
        for (qx, qy) in points.iter().take(12) {
            let s = float_sup(&pf, qx, qy, to_f64(&e_q));
            prop_assert!(v.bound.lo() <= s + 1e-9, "{:?} above {s} at {qx:?} {qy:?}", v.bound);
        }
        let chosen = choose_parameters(&p, &b, &e_q, 0).unwrap();
        prop_assert!(chosen.beta.iter().all(|&x| x >= 0.0));
    }
}

#[test]
fn degenerate_box_reaches_the_point_value() {
    let p = errexp::example1::pmf();
    let e_q = dyadic(1, 6);
    for (qx, qy) in [
        (vec![0.25, 0.5, 0.25], vec![0.5, 0.25, 0.25]),
        (vec![0.75, 0.125, 0.125], vec![0.0625, 0.375, 0.5625]),
    ] {
        let b = ProductBox::new(qx.clone(), qx.clone(), qy.clone(), qy.clone()).unwrap();
        let params = choose_parameters(&p, &b, &e_q, 4).unwrap();
        let lo = holder_bound(&p, &b, &params, &e_q).unwrap().bound.lo();
        let s = float_sup(&p.to_float(), &qx, &qy, to_f64(&e_q));
        assert!(lo <= s + 1e-12 && lo >= 0.9 * s, "{lo} vs {s}");
    }
}

#[test]
fn full_box_bound_is_nearly_trivial() {
    // Every extreme point of the full box is a point mass, so `D = min β`
    // and no `(α, β)` does much better than zero, whatever the dual is.
    let p = two_by_two();
    let e_q = dyadic(1, 7);
    let params = choose_parameters(&p, &ProductBox::full(2, 2), &e_q, 8).unwrap();
    let lo = holder_bound(&p, &ProductBox::full(2, 2), &params, &e_q)
        .unwrap()
        .bound
        .lo();
    let dual = ep_biconjugate(&p.to_float(), to_f64(&e_q)).unwrap();
    assert!(dual > 0.1, "{dual}");
    assert!(lo <= 1e-9 && lo >= -to_f64(&e_q) / 1000.0, "{lo}");
}

#[test]
fn nonpositive_target_needs_one_box() {
    let cfg = SearchConfig {
        budget: 10,
        batch: 1,
        ..SearchConfig::default()
    };
    let (out, stats) =
        branch_and_bound(&two_by_two(), &dyadic(1, 7), &rat("-1/100"), &cfg).unwrap();
    assert!(matches!(out, SearchOutcome::Certified(_)));
    assert_eq!(stats.evaluated, 1);
}

#[test]
fn small_instance_certifies_most_of_the_dual() {
    let p = two_by_two();
    let e_q = dyadic(1, 7);
    let dual = ep_biconjugate(&p.to_float(), to_f64(&e_q)).unwrap();
    let target = from_f64_exact(0.9 * dual);
    let cfg = SearchConfig {
        budget: 200_000,
        batch: 256,
        ..SearchConfig::default()
    };
    let (out, stats) = branch_and_bound(&p, &e_q, &target, &cfg).unwrap();
    let SearchOutcome::Certified(c) = out else {
        panic!("{stats:?}")
    };
    assert!(errexp::certify::check_lower(&c).is_ok());
    let c = Certificate::LowerBound(c);
    assert_eq!(
        parse_certificate(&format_certificate(&c).unwrap()).unwrap(),
        c
    );
}

#[test]
fn upper_bound_examples() {
    let p = two_by_two();
    let info_hi = rat("1/5");
    let c = verify_upper_bound(&p, &p, &info_hi, &Rational::from_integer(0.into()), 256).unwrap();
    assert_eq!(c.r, p);
    let r = rational_pmf(2, 2, &["1/4", "1/4", "1/4", "1/4"]);
    assert!(verify_upper_bound(&p, &r, &rat("1/100"), &rat("1/10"), 256).is_err());
}

#[test]
fn no_certificate_for_a_convex_toy() {
    // Claims taken just above the estimated E_P at two exponents; a target
    // above their chord at the midpoint must not be certifiable.
    let p = two_by_two();
    let (e1, e2) = (dyadic(1, 7), dyadic(3, 7));
    let claim = |e: &Rational| {
        let v = ep_of_eq(&p.to_float(), to_f64(e), 8).unwrap().value;
        from_f64_exact(v + 1e-6)
    };
    let (c1, c2) = (claim(&e1), claim(&e2));
    let u1 = certify_upper(&p, &e1, &c1, 256, 8).unwrap();
    let u2 = certify_upper(&p, &e2, &c2, 256, 8).unwrap();
    let two = Rational::from_integer(2.into());
    let target = (&c1 + &c2) / &two + dyadic(1, 20);
    let cfg = SearchConfig {
        budget: 3000,
        batch: 64,
        ..SearchConfig::default()
    };
    let (out, _) = branch_and_bound(&p, &dyadic(1, 6), &target, &cfg).unwrap();
    assert!(matches!(out, SearchOutcome::BudgetExhausted(_)));
    assert!(nonconvexity_certificate([u1, u2], out.into_certificate()).is_err());
}
