mod common;

use common::{bad_cubic, logistic, random_family, rel, sine, unit};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singer_core::jet::{iterate_jet_right_fold, orbit_jets};
use singer_core::minprinciple::find_nonvanishing_critical_points;
use singer_core::schwarzian::{
    identity_chain_check, negativity_scan, schwarzian_at, schwarzian_iterate_recursive, verify_composition_law,
    ScanVerdict,
};
use singer_core::{compose, iterate_jet, Interval, Jet3, MapSpec, Settings};

fn settings() -> Settings {
    Settings::default()
}

#[test]
fn iterate_jet_examples() {
    let j = iterate_jet(&logistic(4.0), 0.5, 2).unwrap();
    assert_eq!((j.v0, j.v1), (0.0, 0.0));

    // 2-cycle of the logistic map at mu = 3.2
    let p = (4.2 - 0.84f64.sqrt()) / 6.4;
    let j = iterate_jet(&logistic(3.2), p, 2).unwrap();
    assert!((j.v1 - 0.16).abs() < 1e-12);

    let f = logistic(4.0);
    let inner = f.jet_at(0.3).unwrap();
    let outer = f.jet_at(inner.v0).unwrap();
    assert!((compose(outer, inner).v1 + 4.352).abs() < 1e-12);
    assert!((outer.v1 * inner.v1 - compose(outer, inner).v1).abs() == 0.0);
}

#[test]
fn compose_with_identity_is_neutral() {
    let j = Jet3::new(0.3, -1.7, 2.5, 9.0);
    assert_eq!(compose(Jet3::var(j.v0), j), j);
}

#[test]
fn left_and_right_folds_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let f = if rng.gen_bool(0.5) { logistic(rng.gen_range(2.5..4.0)) } else { sine(rng.gen_range(0.5..1.0)) };
        let x = rng.gen_range(0.01..0.99);
        let n = rng.gen_range(1..=12);
        let (Ok(a), Ok(b)) = (iterate_jet(&f, x, n), iterate_jet_right_fold(&f, x, n)) else { continue };
        for (u, v) in a.to_array().into_iter().zip(b.to_array()) {
            assert!(rel(u, v) <= 1e-12, "{a:?} vs {b:?} at x={x}, n={n}");
        }
    }
}

proptest! {
    #[test]
    fn multiplier_chain_rule(mu in 2.5f64..4.0, x in 0.01f64..0.99, m in 1usize..6, n in 1usize..6) {
        let f = logistic(mu);
        let total = iterate_jet(&f, x, m + n).unwrap().v1;
        let head = iterate_jet(&f, x, m).unwrap();
        let tail = iterate_jet(&f, head.v0, n).unwrap().v1;
        prop_assert!(rel(total, tail * head.v1) <= 1e-10);
    }

    #[test]
    fn affine_iterates_are_exact(alpha in -0.9f64..0.9, beta in -0.05f64..0.05, x in -1.0f64..1.0, n in 1usize..10) {
        let f = MapSpec::parse("alpha*x + beta", &[("alpha", alpha), ("beta", beta)], Interval::closed(-2.0, 2.0).unwrap()).unwrap();
        let j = iterate_jet(&f, x, n).unwrap();
        let mut y = x;
        let mut slope = 1.0;
        for _ in 0..n {
            y = alpha * y + beta;
            slope *= alpha;
        }
        prop_assert_eq!(j, Jet3::new(y, slope, 0.0, 0.0));
    }

    #[test]
    fn affine_outer_map_leaves_schwarzian_unchanged(a in 0.1f64..3.0, neg in any::<bool>(), b in -1.0f64..1.0, x in 0.01f64..0.49, mu in 1.0f64..4.0) {
        let a = if neg { -a } else { a };
        let f = logistic(mu);
        let af = MapSpec::parse("a*mu*x*(1-x) + b", &[("a", a), ("b", b), ("mu", mu)], unit()).unwrap();
        let s1 = schwarzian_at(&f, x, 1, &settings()).unwrap().value;
        let s2 = schwarzian_at(&af, x, 1, &settings()).unwrap().value;
        prop_assert!(rel(s1, s2) <= 1e-10);
    }

    #[test]
    fn mobius_maps_have_zero_schwarzian(al in -2.0f64..2.0, be in -2.0f64..2.0, ga in -2.0f64..2.0, de in -2.0f64..2.0, x in -1.0f64..1.0) {
        prop_assume!((al * de - be * ga).abs() > 0.1);
        prop_assume!((ga * x + de).abs() > 0.1);
        let f = MapSpec::parse("(al*x + be)/(ga*x + de)", &[("al", al), ("be", be), ("ga", ga), ("de", de)], Interval::closed(-1.0, 1.0).unwrap()).unwrap();
        let s = schwarzian_at(&f, x, 1, &settings()).unwrap();
        if let Some(v) = s.get() {
            prop_assert!(v.abs() <= 1e-9, "S = {}", v);
        }
    }
}

#[test]
fn logistic_closed_form() {
    for mu in [0.5, 1.0, 2.0, 3.2, 4.0] {
        let f = logistic(mu);
        for x in [0.0, 0.1, 0.3, 0.49, 0.51, 0.9, 1.0] {
            let s = schwarzian_at(&f, x, 1, &settings()).unwrap().value;
            let expect = -6.0 / (1.0 - 2.0 * x).powi(2);
            assert!(rel(s, expect) <= 1e-12, "mu={mu} x={x}");
        }
        assert!(!schwarzian_at(&f, 0.5, 1, &settings()).unwrap().defined);
    }
}

#[test]
fn identity_and_critical_points() {
    let id = MapSpec::parse("x", &[], unit()).unwrap();
    assert_eq!(schwarzian_at(&id, 0.4, 3, &settings()).unwrap().get(), Some(0.0));
    // a preimage of the critical point 0.5 is critical for f^2
    let f = logistic(4.0);
    let pre = (1.0 - 0.5f64.sqrt()) / 2.0;
    assert!(!schwarzian_at(&f, pre, 2, &settings()).unwrap().defined);
    assert!(!schwarzian_at(&f, 0.5, 3, &settings()).unwrap().defined);
}

#[test]
fn two_methods_agree() {
    let s = settings();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut compared = 0;
    for _ in 0..500 {
        let f = random_family(&mut rng);
        let x = rng.gen_range(0.0..1.0);
        let n = rng.gen_range(1..=10);
        let (Ok(a), Ok(b)) = (schwarzian_at(&f, x, n, &s), schwarzian_iterate_recursive(&f, x, n, &s)) else {
            continue;
        };
        if let (Some(a), Some(b)) = (a.get(), b.get()) {
            compared += 1;
            assert!(rel(a, b) <= 1e-8, "{} at x={x}, n={n}: {a} vs {b}", f.label());
        }
    }
    assert!(compared > 300, "only {compared} defined triples");

    let f = logistic(3.8);
    let a = schwarzian_at(&f, 0.21, 6, &s).unwrap().value;
    let b = schwarzian_iterate_recursive(&f, 0.21, 6, &s).unwrap().value;
    assert!(rel(a, b) <= 1e-8);
    assert_eq!(schwarzian_iterate_recursive(&f, 0.3, 1, &s).unwrap(), schwarzian_at(&f, 0.3, 1, &s).unwrap());
}

#[test]
fn composition_law_residuals() {
    let s = settings();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let g = logistic(3.7);
    for _ in 0..1000 {
        let h = common::cubic(std::array::from_fn(|_| rng.gen_range(-2.0..2.0)), unit());
        let x = rng.gen_range(0.0..1.0);
        match verify_composition_law(&h, &g, x, &s) {
            Ok(r) => assert!(r <= 1e-9, "residual {r} at x={x}"),
            Err(singer_core::Error::Undefined(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
    let f = logistic(3.8);
    assert!(verify_composition_law(&f, &f, 0.3, &s).unwrap() <= 1e-9);
    let a = MapSpec::parse("2*x + 1", &[], unit()).unwrap();
    let b = MapSpec::parse("0.5 - 3*x", &[], unit()).unwrap();
    assert_eq!(verify_composition_law(&a, &b, 0.2, &s).unwrap(), 0.0);
}

#[test]
fn negativity_scan_examples() {
    let s = settings();
    let r = negativity_scan(&logistic(3.8), 1, 10_000, &s).unwrap();
    assert_eq!(r.verdict, ScanVerdict::NoCounterexampleOnGrid);
    assert!(r.max.unwrap().s < 0.0);

    let r = negativity_scan(&bad_cubic(), 1, 4097, &s).unwrap();
    assert_eq!(r.verdict, ScanVerdict::CounterexampleFound);
    let top = r.max.unwrap();
    assert!((top.x).abs() < 1e-12 && (top.s - 20.0).abs() < 1e-9);

    let id = MapSpec::parse("x", &[], unit()).unwrap();
    let r = negativity_scan(&id, 1, 100, &s).unwrap();
    assert_eq!(r.non_negative, r.defined);
}

#[test]
fn orbit_jets_end_at_the_iterate() {
    let f = logistic(3.6);
    let jets = orbit_jets(&f, 0.2, 7).unwrap();
    assert_eq!(jets.len(), 7);
    // per-step jets of f; their values walk the orbit and their slopes multiply to (f^7)'
    assert_eq!(jets.last().unwrap().v0, f.iterate(0.2, 7).unwrap());
    let slope: f64 = jets.iter().map(|j| j.v1).product();
    assert_eq!(slope, iterate_jet(&f, 0.2, 7).unwrap().v1);
}

#[test]
fn sign_propagates_to_identity_quotients() {
    let s = settings();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..6 {
        let f = if rng.gen_bool(0.5) { logistic(rng.gen_range(2.8..4.0)) } else { sine(rng.gen_range(0.7..1.0)) };
        let scan = negativity_scan(&f, 1, 2048, &s).unwrap();
        assert_eq!(scan.verdict, ScanVerdict::NoCounterexampleOnGrid, "{}", f.label());
        for n in 1..=6 {
            let set = find_nonvanishing_critical_points(&f, n, s.grid_size, &s).unwrap();
            for &x in &set.points {
                match identity_chain_check(&f, n, x, &s) {
                    Ok(c) => assert!(c.quotient < 0.0, "{} n={n} x={x}: {}", f.label(), c.quotient),
                    Err(singer_core::Error::PreconditionViolated(_)) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
}

#[test]
fn identity_residuals_positive_case() {
    let s = settings();
    let c = identity_chain_check(&bad_cubic(), 1, 0.0, &s).unwrap();
    assert!(c.quotient > 0.0);
    assert!(c.final_identity_residual <= 1e-12);
    assert!(identity_chain_check(&bad_cubic(), 0, 0.0, &s).is_err());
}
