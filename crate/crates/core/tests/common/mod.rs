#![allow(dead_code)]

use rand::Rng;
use singer_core::{Interval, MapSpec};

pub fn unit() -> Interval {
    Interval::closed(0.0, 1.0).unwrap()
}

pub fn logistic(mu: f64) -> MapSpec {
    MapSpec::parse("mu*x*(1-x)", &[("mu", mu)], unit()).unwrap()
}

pub fn sine(a: f64) -> MapSpec {
    MapSpec::parse("a*sin(pi*x)", &[("a", a)], unit()).unwrap()
}

pub fn cubic(c: [f64; 4], domain: Interval) -> MapSpec {
    MapSpec::parse("c0 + c1*x + c2*x^2 + c3*x^3", &[("c0", c[0]), ("c1", c[1]), ("c2", c[2]), ("c3", c[3])], domain)
        .unwrap()
}

/// The cubic with a positive Schwarzian at the origin.
pub fn bad_cubic() -> MapSpec {
    MapSpec::parse("x^3/3 + 0.1*x", &[], Interval::closed(-1.0, 1.0).unwrap()).unwrap()
}

/// Polynomial, logistic or sine map with random parameters.
pub fn random_family<R: Rng>(rng: &mut R) -> MapSpec {
    match rng.gen_range(0..3) {
        0 => cubic(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)), unit()),
        1 => logistic(rng.gen_range(0.5..4.0)),
        _ => sine(rng.gen_range(0.3..1.0)),
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(b.abs())
    }
}
