mod common;

use common::{bad_cubic, logistic, sine};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singer_core::minprinciple::{
    check_minimum_principle_on, classify_extrema, derivative_critical_points, find_derivative_extrema,
    find_nonvanishing_critical_points, minimum_principle_report, ExtremumKind,
};
use singer_core::schwarzian::{negativity_scan, ScanVerdict};
use singer_core::{Error, Interval, MapSpec, Settings};

/// Dense polynomial, lowest degree first.
#[derive(Clone, Debug)]
struct Poly(Vec<f64>);

impl Poly {
    fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// `self(inner(x))` by Horner's scheme on polynomials.
    fn compose(&self, inner: &Poly) -> Poly {
        let mut acc = Poly(vec![0.0]);
        for c in self.0.iter().rev() {
            acc = acc.mul(inner);
            acc.0[0] += c;
        }
        acc
    }

    fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    fn degree(&self) -> usize {
        self.0.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    /// Real roots in `[a, b]`: the roots of `p'` split the interval into
    /// monotone pieces, each holding at most one root.
    fn roots(&self, a: f64, b: f64) -> Vec<f64> {
        if self.degree() == 0 {
            return Vec::new();
        }
        let mut cuts = vec![a];
        cuts.extend(self.derivative().roots(a, b));
        cuts.push(b);
        let mut out: Vec<f64> = Vec::new();
        for w in cuts.windows(2) {
            let (mut lo, mut hi) = (w[0], w[1]);
            let (flo, fhi) = (self.eval(lo), self.eval(hi));
            if flo == 0.0 {
                if out.last().is_none_or(|r| (r - lo).abs() > 1e-14) {
                    out.push(lo);
                }
                continue;
            }
            if flo * fhi > 0.0 {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if self.eval(mid) * flo > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        out
    }
}

fn logistic_poly(mu: f64, n: usize) -> Poly {
    let f = Poly(vec![0.0, mu, -mu]);
    let mut it = f.clone();
    for _ in 1..n {
        it = f.compose(&it);
    }
    it
}

fn settings() -> Settings {
    Settings::default()
}

#[test]
fn examples_of_extrema() {
    let s = settings();
    assert!(find_derivative_extrema(&logistic(4.0), 1, 4096, &s).unwrap().is_empty());

    let ext = find_derivative_extrema(&bad_cubic(), 1, 4096, &s).unwrap();
    assert_eq!(ext.len(), 1);
    assert_eq!(ext[0].kind, ExtremumKind::LocalMin);
    assert!(ext[0].x.abs() <= 1e-8);
    assert!((ext[0].g_value - 0.1).abs() <= 1e-12);

    // (f^2)' = 16(2u - 16u^3) with u = x - 1/2, so (f^2)'' vanishes at u = ±1/sqrt(24)
    let ext = find_derivative_extrema(&logistic(4.0), 2, 4096, &s).unwrap();
    let xs: Vec<f64> = ext.iter().map(|e| e.x).collect();
    let d = 384f64.sqrt() / 96.0;
    let expect = [0.5 - d, 0.5 + d];
    assert_eq!(xs.len(), 2);
    for (x, e) in xs.iter().zip(expect) {
        assert!((x - e).abs() <= 1e-10, "{x} vs {e}");
    }
}

#[test]
fn bracketing_matches_polynomial_oracle() {
    let s = settings();
    let grid = s.grid_size;
    for mu in [2.9, 3.3, 3.7, 4.0] {
        for n in 1..=3 {
            let second = logistic_poly(mu, n).derivative().derivative();
            let oracle = second.roots(0.0, 1.0);
            let found = find_derivative_extrema(&logistic(mu), n, grid, &s).unwrap();
            for (i, r) in oracle.iter().enumerate() {
                let sep = [i.checked_sub(1).map(|j| oracle[j]), oracle.get(i + 1).copied()]
                    .into_iter()
                    .flatten()
                    .map(|o| (o - r).abs())
                    .fold(f64::INFINITY, f64::min);
                if sep <= 2.0 / grid as f64 || *r <= 0.0 || *r >= 1.0 {
                    continue;
                }
                let best = found.iter().map(|e| (e.x - r).abs()).fold(f64::INFINITY, f64::min);
                assert!(best <= 1e-8, "mu={mu} n={n}: oracle root {r} missed (closest {best})");
            }
            assert!(found.len() <= oracle.len(), "mu={mu} n={n}: spurious extrema");
        }
    }
}

#[test]
fn interval_check_examples() {
    let s = settings();
    let cubic = bad_cubic();
    let ext = find_derivative_extrema(&cubic, 1, 4096, &s).unwrap();
    let c = check_minimum_principle_on(&ext, &Interval::closed(-0.5, 0.5).unwrap(), &cubic, 1, &s).unwrap();
    assert!(!c.pass);
    assert!(c.witness.abs() <= 1e-8);
    assert!((c.interior_min - 0.1).abs() < 1e-12 && (c.endpoint_min - 0.35).abs() < 1e-12);

    let f = logistic(3.8);
    let c = check_minimum_principle_on(&[], &Interval::closed(0.1, 0.4).unwrap(), &f, 1, &s).unwrap();
    assert!(c.pass);

    // constant g: the strict inequality fails everywhere, reported as a tie
    let affine = MapSpec::parse("0.5*x + 0.1", &[], common::unit()).unwrap();
    let c = check_minimum_principle_on(&[], &Interval::closed(0.2, 0.6).unwrap(), &affine, 3, &s).unwrap();
    assert!(!c.pass && c.degenerate);

    let err = check_minimum_principle_on(&[], &Interval::closed(0.3, 0.7).unwrap(), &f, 1, &s);
    assert!(matches!(err, Err(Error::VanishingOnInterval { .. })));
}

#[test]
fn report_examples() {
    let s = settings();
    for n in 1..=8 {
        let r = minimum_principle_report(&logistic(3.8), n, &s).unwrap();
        assert!(r.violations.is_empty(), "n={n}: {:?}", r.violations);
    }
    let r = minimum_principle_report(&bad_cubic(), 1, &s).unwrap();
    assert_eq!(r.violations.len(), 1);
    assert!(!r.passed());
    let r = minimum_principle_report(&logistic(4.0), 1, &s).unwrap();
    assert!(r.extrema.is_empty() && r.passed());
}

/// A failing interval always holds a violation or a tie, and every reported
/// violation makes a small window around it fail.
#[test]
fn interval_check_and_classification_agree() {
    let s = Settings { grid_size: 512, ..settings() };
    let maps: Vec<(MapSpec, usize)> = vec![
        (logistic(3.8), 1),
        (logistic(3.8), 3),
        (sine(0.9), 2),
        (bad_cubic(), 1),
        (MapSpec::parse("-x^3/3 - 0.1*x", &[], Interval::closed(-1.0, 1.0).unwrap()).unwrap(), 1),
        (MapSpec::parse("x^3/3 + 0.1*x + 0.2*sin(3*x)", &[], Interval::closed(-1.0, 1.0).unwrap()).unwrap(), 1),
        (MapSpec::parse("0.5*x + 0.1", &[], common::unit()).unwrap(), 2),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (map, n) in &maps {
        let ext = find_derivative_extrema(map, *n, 4096, &s).unwrap();
        let report = classify_extrema(*n, ext.clone(), &s);
        let dom = *map.domain();
        let mut checked = 0;
        for _ in 0..400 {
            let a = rng.gen_range(dom.lo..dom.hi);
            let b = rng.gen_range(dom.lo..dom.hi);
            let Ok(j) = Interval::closed(a.min(b), a.max(b)) else { continue };
            let Ok(c) = check_minimum_principle_on(&ext, &j, map, *n, &s) else { continue };
            checked += 1;
            let inside = report.violations.iter().any(|v| v.x > j.lo && v.x < j.hi);
            if !c.pass {
                assert!(inside || c.degenerate, "{} on {j}: failure without violation", map.label());
            }
        }
        assert!(checked > 20, "{}: too few non-vanishing intervals", map.label());
        for v in &report.violations {
            let w = Interval::closed(v.x - 1e-3, v.x + 1e-3).unwrap();
            let c = check_minimum_principle_on(&ext, &w, map, *n, &s).unwrap();
            assert!(!c.pass, "{}: violation at {} passes its window", map.label(), v.x);
        }
    }
}

#[test]
fn negative_schwarzian_maps_have_no_violations() {
    let s = settings();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..20 {
        let f = if rng.gen_bool(0.5) { logistic(rng.gen_range(2.5..4.0)) } else { sine(rng.gen_range(0.6..1.0)) };
        assert_eq!(negativity_scan(&f, 1, 4096, &s).unwrap().verdict, ScanVerdict::NoCounterexampleOnGrid);
        for n in 1..=6 {
            let r = classify_extrema(n, find_derivative_extrema(&f, n, s.grid_size, &s).unwrap(), &s);
            assert!(r.violations.is_empty(), "{} n={n}: {:?}", f.label(), r.violations);
        }
    }
}

#[test]
fn critical_points_of_derivatives() {
    let s = settings();
    let set = find_nonvanishing_critical_points(&bad_cubic(), 1, 4096, &s).unwrap();
    // (f^2)'' vanishes at 0 where (f^2)' = 0.01
    assert!(set.points.iter().any(|x| x.abs() <= 1e-8));
    assert!(!set.degenerate);

    let affine = MapSpec::parse("0.5*x + 0.1", &[], common::unit()).unwrap();
    let set = find_nonvanishing_critical_points(&affine, 2, 64, &s).unwrap();
    assert!(set.degenerate);
    assert_eq!(set.points.len(), 64);

    assert!(find_nonvanishing_critical_points(&bad_cubic(), 0, 64, &s).is_err());
    let set = derivative_critical_points(&logistic(3.8), 2, 4096, &s).unwrap();
    let ext = find_derivative_extrema(&logistic(3.8), 2, 4096, &s).unwrap();
    assert_eq!(set.points.len(), ext.iter().filter(|e| e.g_value.abs() > s.vanish_threshold).count());
}
