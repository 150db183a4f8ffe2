//! Extrema of `g = (f^n)'` and the Minimum Principle.
//!
//! `g` satisfies the Minimum Principle on `J = [a, b]` (with `g != 0` on `J`)
//! when `|g(x)| > min(|g(a)|, |g(b)|)` for every interior `x`. That holds on
//! every such `J` exactly when each local maximum of `g` is positive and
//! each local minimum is negative.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::MapSpec;
use crate::interval::Interval;
use crate::jet::{iterate_jet, Jet3};
use crate::roots::{grid_roots, GridRootOptions};
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    LocalMax,
    LocalMin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivExtremum {
    pub x: f64,
    pub kind: ExtremumKind,
    /// `(f^n)'(x)`.
    pub g_value: f64,
    pub refined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCheck {
    pub interval: Interval,
    pub endpoint_min: f64,
    pub interior_min: f64,
    pub witness: f64,
    pub pass: bool,
    /// Interior minimum ties the endpoint minimum within `tie_tol`.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinPrincipleReport {
    pub n: usize,
    pub extrema: Vec<DerivExtremum>,
    pub violations: Vec<DerivExtremum>,
    pub interval_checks: Vec<IntervalCheck>,
}

impl MinPrincipleReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.interval_checks.iter().all(|c| c.pass)
    }
}

fn jet_or_none(map: &MapSpec, x: f64, n: usize) -> Option<Jet3> {
    iterate_jet(map, x, n).ok()
}

/// Local extrema of `(f^n)'`: sign changes of `(f^n)''` on the grid,
/// refined with Newton steps on `(f^n)''` and classified by the sign of
/// `(f^n)'''` at the refined point.
pub fn find_derivative_extrema(
    map: &MapSpec,
    n: usize,
    grid_size: usize,
    settings: &Settings,
) -> Result<Vec<DerivExtremum>> {
    if n == 0 {
        return Err(Error::invalid("iterate order must be at least 1"));
    }
    if grid_size < 16 {
        return Err(Error::invalid("extremum search needs grid_size >= 16"));
    }
    let grid = map.domain().grid(grid_size);
    let second = |x: f64| jet_or_none(map, x, n).map(|j| (j.v2, j.v3));
    let roots = grid_roots(
        &grid,
        &second,
        &second,
        GridRootOptions { max_newton: settings.newton_max_iter, touching_tol: None },
    );
    let h = map.domain().width() / grid_size as f64;
    let mut out = Vec::with_capacity(roots.len());
    for root in roots {
        let Some(j) = jet_or_none(map, root.x, n) else { continue };
        // a grid-node zero must still be a sign change
        let kind = if j.v3 < 0.0 {
            ExtremumKind::LocalMax
        } else if j.v3 > 0.0 {
            ExtremumKind::LocalMin
        } else {
            let (Some(l), Some(r)) = (jet_or_none(map, root.x - h, n), jet_or_none(map, root.x + h, n)) else {
                continue;
            };
            match (l.v2 > 0.0, r.v2 > 0.0) {
                (true, false) => ExtremumKind::LocalMax,
                (false, true) => ExtremumKind::LocalMin,
                _ => continue,
            }
        };
        let refined = root.converged && j.v2.abs() <= settings.crit_tol * root.scale.max(j.v3.abs() * h);
        out.push(DerivExtremum { x: root.x, kind, g_value: j.v1, refined });
    }
    Ok(out)
}

/// Extrema violating the characterisation: local maxima with `g <= 0` and
/// local minima with `g >= 0`, both thresholded at `tie_tol`.
pub fn classify_extrema(n: usize, extrema: Vec<DerivExtremum>, settings: &Settings) -> MinPrincipleReport {
    let t = settings.tie_tol;
    let violations = extrema
        .iter()
        .filter(|e| match e.kind {
            ExtremumKind::LocalMax => e.g_value <= t,
            ExtremumKind::LocalMin => e.g_value >= -t,
        })
        .cloned()
        .collect();
    MinPrincipleReport { n, extrema, violations, interval_checks: Vec::new() }
}

/// Definition check on one interval `J`. Candidates for the interior minimum
/// of `|g|` are the refined extrema inside `J` plus a uniform sample.
pub fn check_minimum_principle_on(
    extrema: &[DerivExtremum],
    j: &Interval,
    map: &MapSpec,
    n: usize,
    settings: &Settings,
) -> Result<IntervalCheck> {
    let g = |x: f64| iterate_jet(map, x, n).map(|jet| jet.v1);
    let (ga, gb) = (g(j.lo)?, g(j.hi)?);
    let samples: Vec<(f64, f64)> = Interval::open(j.lo, j.hi)?
        .grid(settings.grid_size.max(16))
        .into_par_iter()
        .map(|x| g(x).map(|v| (x, v)))
        .collect::<Result<_>>()?;
    let mut candidates = samples;
    candidates.extend(extrema.iter().filter(|e| e.refined && e.x > j.lo && e.x < j.hi).map(|e| (e.x, e.g_value)));

    let reference_sign = ga.signum();
    for &(x, v) in std::iter::once(&(j.lo, ga)).chain(&candidates).chain(std::iter::once(&(j.hi, gb))) {
        if v.abs() <= settings.vanish_threshold || v.signum() != reference_sign {
            return Err(Error::VanishingOnInterval { x });
        }
    }

    let endpoint_min = ga.abs().min(gb.abs());
    let (witness, interior_min) = candidates
        .iter()
        .map(|&(x, v)| (x, v.abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .expect("interior sample is non-empty");
    let degenerate = (interior_min - endpoint_min).abs() <= settings.tie_tol;
    let pass = interior_min > endpoint_min + settings.tie_tol;
    Ok(IntervalCheck { interval: *j, endpoint_min, interior_min, witness, pass, degenerate })
}

/// Extrema, classification and a local interval check around each extremum.
pub fn minimum_principle_report(map: &MapSpec, n: usize, settings: &Settings) -> Result<MinPrincipleReport> {
    let extrema = find_derivative_extrema(map, n, settings.grid_size, settings)?;
    let mut report = classify_extrema(n, extrema, settings);
    let h = map.domain().width() / settings.grid_size as f64;
    let dom = map.domain();
    let xs: Vec<f64> = report.extrema.iter().map(|e| e.x).collect();
    for (i, e) in report.extrema.iter().enumerate() {
        if !e.refined || e.g_value.abs() <= settings.vanish_threshold {
            continue;
        }
        let left_gap = if i > 0 { e.x - xs[i - 1] } else { e.x - dom.lo };
        let right_gap = if i + 1 < xs.len() { xs[i + 1] - e.x } else { dom.hi - e.x };
        let radius = (0.5 * left_gap.min(right_gap)).min(4.0 * h);
        if radius <= 0.0 {
            continue;
        }
        let Ok(window) = Interval::closed(e.x - radius, e.x + radius) else { continue };
        // windows crossing a zero of g are outside the definition's scope
        if let Ok(check) = check_minimum_principle_on(
            std::slice::from_ref(e),
            &window,
            map,
            n,
            &Settings { grid_size: 64, ..settings.clone() },
        ) {
            report.interval_checks.push(check);
        }
    }
    Ok(report)
}

/// Points where `(f^m)'' = 0` and `(f^m)' != 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointSet {
    pub order: usize,
    pub points: Vec<f64>,
    /// `(f^m)''` vanished on the whole grid; `points` are then grid nodes.
    pub degenerate: bool,
}

/// Non-vanishing critical points of `(f^m)'` for an explicit iterate order.
pub fn derivative_critical_points(
    map: &MapSpec,
    order: usize,
    grid_size: usize,
    settings: &Settings,
) -> Result<CriticalPointSet> {
    if order == 0 {
        return Err(Error::invalid("iterate order must be at least 1"));
    }
    let grid = map.domain().grid(grid_size.max(16));
    let jets: Vec<Option<Jet3>> = grid.par_iter().map(|&x| jet_or_none(map, x, order)).collect();
    let flat = jets.iter().flatten().all(|j| j.v2 == 0.0);
    if flat {
        let points = grid
            .iter()
            .zip(&jets)
            .filter_map(|(&x, j)| j.filter(|j| j.v1.abs() > settings.vanish_threshold).map(|_| x))
            .collect();
        return Ok(CriticalPointSet { order, points, degenerate: true });
    }
    let points = find_derivative_extrema(map, order, grid_size, settings)?
        .into_iter()
        .filter(|e| e.refined && e.g_value.abs() > settings.vanish_threshold)
        .map(|e| e.x)
        .collect();
    Ok(CriticalPointSet { order, points, degenerate: false })
}

/// Non-vanishing critical points of `(f^{n+1})'`, the points where the
/// identity chain is checked.
pub fn find_nonvanishing_critical_points(
    map: &MapSpec,
    n: usize,
    grid_size: usize,
    settings: &Settings,
) -> Result<CriticalPointSet> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    derivative_critical_points(map, n + 1, grid_size, settings)
}
