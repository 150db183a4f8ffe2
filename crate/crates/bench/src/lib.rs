//! Fixtures shared by the criterion benches.

use singer_core::{Interval, MapSpec};

pub fn logistic(mu: f64) -> MapSpec {
    MapSpec::parse("mu*x*(1-x)", &[("mu", mu)], Interval::closed(0.0, 1.0).expect("unit interval"))
        .expect("logistic map")
}
