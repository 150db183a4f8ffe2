//! Periodic orbits, immediate basins and the empirical Singer check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{MapSpec, Params};
use crate::interval::Interval;
use crate::jet::iterate_jet;
use crate::roots::{grid_roots, GridRootOptions};
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Attracting,
    Neutral,
    Repelling,
}

impl Stability {
    pub fn classify(multiplier: f64, neutral_band: f64) -> Self {
        let m = multiplier.abs();
        if (m - 1.0).abs() <= neutral_band {
            Stability::Neutral
        } else if m < 1.0 {
            Stability::Attracting
        } else {
            Stability::Repelling
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    /// Orbit points in dynamical order starting from the smallest, so that
    /// `f(points[i]) ≈ points[(i + 1) % period]`.
    pub points: Vec<f64>,
    pub period: usize,
    /// `(f^p)'` at `points[0]`.
    pub multiplier: f64,
    pub stability: Stability,
}

impl PeriodicOrbit {
    pub fn sorted_points(&self) -> Vec<f64> {
        let mut v = self.points.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Largest `|f(p_i) - p_{i+1}|` around the cycle.
    pub fn cycle_residual(&self, map: &MapSpec) -> f64 {
        let p = self.period;
        (0..p).map(|i| (map.value(self.points[i]) - self.points[(i + 1) % p]).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub x: f64,
    pub second_derivative: f64,
    pub nondegenerate: bool,
}

/// Zeros of `f'`, including touching zeros such as that of `x^3`.
pub fn critical_points(map: &MapSpec, grid_size: usize, settings: &Settings) -> Result<Vec<CriticalPoint>> {
    if grid_size < 16 {
        return Err(Error::invalid("critical point search needs grid_size >= 16"));
    }
    let grid = map.domain().grid(grid_size);
    let g1 = |x: f64| map.jet_at(x).ok().map(|j| (j.v1, j.v2));
    let g2 = |x: f64| map.jet_at(x).ok().map(|j| (j.v2, j.v3));
    let roots = grid_roots(
        &grid,
        &g1,
        &g2,
        GridRootOptions { max_newton: settings.newton_max_iter, touching_tol: Some(settings.vanish_threshold) },
    );
    let mut out: Vec<CriticalPoint> = Vec::new();
    for r in roots {
        if out.last().is_some_and(|c| (c.x - r.x).abs() <= settings.dedupe_tol) {
            continue;
        }
        let j = map.jet_at(r.x)?;
        if j.v1.abs() > settings.vanish_threshold.max(settings.crit_tol * r.scale) {
            continue;
        }
        out.push(CriticalPoint {
            x: r.x,
            second_derivative: j.v2,
            nondegenerate: j.v2.abs() > settings.vanish_threshold,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitCatalog {
    pub orbits: Vec<PeriodicOrbit>,
    /// Candidates dropped because refinement failed or the cycle did not close.
    pub dropped_candidates: usize,
}

impl OrbitCatalog {
    pub fn with_stability(&self, s: Stability) -> impl Iterator<Item = &PeriodicOrbit> {
        self.orbits.iter().filter(move |o| o.stability == s)
    }
}

fn proper_divisors(p: usize) -> impl Iterator<Item = usize> {
    (1..p).filter(move |&d| p.is_multiple_of(d))
}

/// Periodic orbits of exact period `1..=max_period`, found as roots of
/// `f^p(x) - x` (crossings plus near-tangencies) and grouped into cycles.
pub fn find_periodic_orbits(
    map: &MapSpec,
    max_period: usize,
    grid_size: usize,
    settings: &Settings,
) -> Result<OrbitCatalog> {
    if max_period == 0 {
        return Err(Error::invalid("max_period must be at least 1"));
    }
    if grid_size < 16 {
        return Err(Error::invalid("orbit search needs grid_size >= 16"));
    }
    let grid = map.domain().grid(grid_size);
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let mut dropped = 0;
    let near = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;

    for p in 1..=max_period {
        let g1 = |x: f64| iterate_jet(map, x, p).ok().map(|j| (j.v0 - x, j.v1 - 1.0));
        let g2 = |x: f64| iterate_jet(map, x, p).ok().map(|j| (j.v1 - 1.0, j.v2));
        let roots = grid_roots(
            &grid,
            &g1,
            &g2,
            GridRootOptions { max_newton: settings.newton_max_iter, touching_tol: Some(settings.tangency_tol) },
        );

        let mut candidates: Vec<f64> = Vec::new();
        for r in roots {
            let closes = map.iterate(r.x, p).is_ok_and(|y| near(y, r.x, settings.orbit_tol));
            if !r.converged || !closes {
                dropped += 1;
                continue;
            }
            if candidates.last().is_some_and(|&c| near(c, r.x, settings.dedupe_tol)) {
                continue;
            }
            candidates.push(r.x);
        }

        for x in candidates {
            let known =
                orbits.iter().any(|o| o.period == p && o.points.iter().any(|&q| near(q, x, settings.dedupe_tol)));
            if known {
                continue;
            }
            let lower = proper_divisors(p).any(|d| map.iterate(x, d).is_ok_and(|y| near(y, x, settings.period_tol)));
            let merged = orbits
                .iter()
                .filter(|o| p % o.period == 0)
                .any(|o| o.points.iter().any(|&q| near(q, x, settings.merge_tol)));
            if lower || merged {
                continue;
            }
            let mut points = Vec::with_capacity(p);
            let mut y = x;
            for _ in 0..p {
                points.push(y);
                y = map.apply(y)?;
            }
            let start = points.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).expect("p >= 1");
            points.rotate_left(start);
            let multiplier = iterate_jet(map, points[0], p)?.v1;
            let orbit = PeriodicOrbit {
                points,
                period: p,
                multiplier,
                stability: Stability::classify(multiplier, settings.neutral_band),
            };
            if orbit.cycle_residual(map) > settings.orbit_tol {
                dropped += 1;
                continue;
            }
            orbits.push(orbit);
        }
    }
    Ok(OrbitCatalog { orbits, dropped_candidates: dropped })
}

/// Largest pairwise deviation of `(f^p)'` over the orbit points, relative to
/// `max(|λ_i|, |λ_j|, 1)`.
pub fn multiplier_consistency(orbit: &PeriodicOrbit, map: &MapSpec) -> Result<f64> {
    let ms: Vec<f64> =
        orbit.points.iter().map(|&x| iterate_jet(map, x, orbit.period).map(|j| j.v1)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for (i, a) in ms.iter().enumerate() {
        for b in &ms[i + 1..] {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Single-linkage clustering of sorted values: a new cluster starts whenever
/// the gap to the previous value exceeds `tol`.
pub fn cluster_points(mut values: Vec<f64>, tol: f64) -> Vec<Cluster> {
    values.sort_by(f64::total_cmp);
    let mut out: Vec<Cluster> = Vec::new();
    let mut sum = 0.0;
    for v in values {
        match out.last_mut() {
            Some(c) if v - c.max <= tol => {
                c.max = v;
                c.count += 1;
                sum += v;
                c.center = sum / c.count as f64;
            }
            _ => {
                sum = v;
                out.push(Cluster { center: v, min: v, max: v, count: 1 });
            }
        }
    }
    out
}

/// Approximates the ω-limit set of `x0`: skip `transient` steps, collect the
/// next `window` points and cluster them.
pub fn omega_limit(map: &MapSpec, x0: f64, transient: usize, window: usize, cluster_tol: f64) -> Result<Vec<Cluster>> {
    if transient == 0 || window == 0 {
        return Err(Error::invalid("transient and window must be at least 1"));
    }
    let mut y = map.iterate(x0, transient)?;
    let mut pts = Vec::with_capacity(window);
    for step in 0..window {
        if !map.domain().contains_closure(y) {
            return Err(Error::Escaped { x: y, step: transient + step });
        }
        pts.push(y);
        y = map.apply(y)?;
    }
    Ok(cluster_points(pts, cluster_tol))
}

/// Convergence settings recorded with a basin estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTest {
    /// Maximum number of applications of `f^p`.
    pub cap: usize,
    pub tolerance: f64,
    /// Consecutive in-tolerance steps required.
    pub confirm: usize,
}

impl ConvergenceTest {
    pub fn for_orbit(orbit: &PeriodicOrbit, settings: &Settings) -> Self {
        match orbit.stability {
            Stability::Neutral => {
                ConvergenceTest { cap: settings.neutral_cap, tolerance: settings.neutral_tol, confirm: 8 }
            }
            _ => ConvergenceTest { cap: settings.basin_cap, tolerance: settings.basin_tol, confirm: 4 },
        }
    }

    /// Number of `f^p` steps after which `y` settled within tolerance of
    /// `target`, or `None` if it never did within the cap.
    pub fn steps_to_converge(&self, map: &MapSpec, y: f64, target: f64, period: usize) -> Option<usize> {
        let dom = map.domain();
        self.steps_to_converge_within(map, y, target, period, (dom.lo, dom.hi))
    }

    /// As [`steps_to_converge`](Self::steps_to_converge), but every `f^p`
    /// iterate must also stay inside `bounds`.
    pub fn steps_to_converge_within(
        &self,
        map: &MapSpec,
        y: f64,
        target: f64,
        period: usize,
        bounds: (f64, f64),
    ) -> Option<usize> {
        let mut z = y;
        let mut inside = 0;
        for k in 1..=self.cap {
            for _ in 0..period {
                if !map.domain().contains_closure(z) {
                    return None;
                }
                z = map.value(z);
            }
            if !z.is_finite() || z < bounds.0 || z > bounds.1 {
                return None;
            }
            if (z - target).abs() < self.tolerance {
                inside += 1;
                if inside >= self.confirm {
                    return Some(k);
                }
            } else {
                inside = 0;
            }
        }
        None
    }

    pub fn converges(&self, map: &MapSpec, y: f64, target: f64, period: usize) -> bool {
        self.steps_to_converge(map, y, target, period).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinComponent {
    pub orbit_point: f64,
    pub lo: f64,
    pub hi: f64,
}

impl BasinComponent {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinEstimate {
    pub period: usize,
    pub components: Vec<BasinComponent>,
    pub test: ConvergenceTest,
    /// Outward probing step before bisection.
    pub probe_step: f64,
    pub resolution: f64,
}

impl BasinEstimate {
    pub fn contains(&self, x: f64) -> bool {
        self.components.iter().any(|c| c.contains(x))
    }

    /// Some component reaches within `resolution` of an end of `domain`.
    pub fn touches_boundary(&self, domain: &Interval) -> bool {
        self.components.iter().any(|c| c.lo - domain.lo <= self.resolution || domain.hi - c.hi <= self.resolution)
    }
}

const FINAL_STEP_SCAN: usize = 16;

/// Nearest fixed point of `f^{2p}` beyond `q` in direction `dir`, or the
/// domain end. The immediate basin of `q` can hold no other such point.
fn confining_point(map: &MapSpec, q: f64, p: usize, dir: f64, step: f64, resolution: f64) -> f64 {
    let dom = map.domain();
    let end = if dir < 0.0 { dom.lo } else { dom.hi };
    let h = |x: f64| map.iterate(x, 2 * p).map(|y| y - x).ok();
    let mut prev = q;
    let mut sign = 0.0;
    loop {
        let x = (prev + dir * step).clamp(dom.lo, dom.hi);
        if x == prev {
            return end;
        }
        let Some(v) = h(x) else { return prev };
        if v == 0.0 {
            return x;
        }
        if sign == 0.0 {
            sign = v.signum();
        } else if v.signum() != sign {
            let (mut inner, mut outer) = (prev, x);
            while (outer - inner).abs() > resolution.min(1e-12 * q.abs().max(1.0)).max(f64::EPSILON) {
                let mid = 0.5 * (inner + outer);
                match h(mid) {
                    Some(m) if m.signum() == sign => inner = mid,
                    _ => outer = mid,
                }
            }
            return outer;
        }
        prev = x;
    }
}

/// One interval per orbit point: the connected set around it whose points
/// converge to that point under `g = f^p` while their `g`-orbit stays
/// between the nearest fixed points of `g^2`. Found by stepping outward on
/// the grid scale, then bisecting the first failing step down to
/// `resolution`.
///
/// Without the confinement the walk would wander into the region outside
/// the basin boundary, where preimages of the basin interleave with
/// non-converging points at every scale.
pub fn immediate_basin(map: &MapSpec, orbit: &PeriodicOrbit, settings: &Settings) -> Result<BasinEstimate> {
    if orbit.stability == Stability::Repelling {
        return Err(Error::invalid("immediate basin requested for a repelling orbit"));
    }
    let test = ConvergenceTest::for_orbit(orbit, settings);
    let dom = *map.domain();
    let step = dom.width() / settings.grid_size.max(16) as f64;
    let p = orbit.period;

    let expand = |pt: f64, dir: f64, bounds: (f64, f64)| -> f64 {
        let ok = |y: f64| test.steps_to_converge_within(map, y, pt, p, bounds).is_some();
        let mut good = pt;
        let bad = loop {
            let next = (good + dir * step).clamp(bounds.0, bounds.1);
            if next == good {
                return good;
            }
            if ok(next) {
                good = next;
            } else {
                break next;
            }
        };
        // nearest failure inside the last step, so that bisection cannot
        // land on a converging island beyond a narrow gap
        let mut bad = bad;
        for k in 1..FINAL_STEP_SCAN {
            let y = good + (bad - good) * k as f64 / FINAL_STEP_SCAN as f64;
            if !ok(y) {
                bad = y;
                break;
            }
            good = y;
        }
        while (bad - good).abs() > settings.resolution {
            let mid = 0.5 * (good + bad);
            if ok(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };

    let components = orbit
        .points
        .par_iter()
        .map(|&pt| {
            if !test.converges(map, pt, pt, p) {
                return Err(Error::DegenerateBasin { x: pt });
            }
            let bounds = (
                confining_point(map, pt, p, -1.0, step, settings.resolution),
                confining_point(map, pt, p, 1.0, step, settings.resolution),
            );
            Ok(BasinComponent { orbit_point: pt, lo: expand(pt, -1.0, bounds), hi: expand(pt, 1.0, bounds) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BasinEstimate { period: p, components, test, probe_step: step, resolution: settings.resolution })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideConvergence {
    pub start: f64,
    pub converged: bool,
    /// Applications of `f^p` until convergence, or the cap.
    pub iterations: usize,
    pub final_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeutralCheck {
    pub orbit: PeriodicOrbit,
    pub left: Option<SideConvergence>,
    pub right: Option<SideConvergence>,
    pub cap: usize,
    pub tolerance: f64,
}

impl NeutralCheck {
    pub fn attracts(&self) -> bool {
        self.left.iter().chain(&self.right).any(|s| s.converged)
    }
}

/// One-sided long-iteration test from `points[0] ± 5%` of the domain width.
pub fn neutral_convergence(map: &MapSpec, orbit: &PeriodicOrbit, settings: &Settings) -> NeutralCheck {
    let test = ConvergenceTest { cap: settings.neutral_cap, tolerance: settings.neutral_tol, confirm: 8 };
    let dom = map.domain();
    let target = orbit.points[0];
    let offset = 0.05 * dom.width();
    let side = |start: f64| -> Option<SideConvergence> {
        if !dom.contains(start) {
            return None;
        }
        let steps = test.steps_to_converge(map, start, target, orbit.period);
        let iterations = steps.unwrap_or(test.cap);
        let end = map.iterate(start, iterations * orbit.period).unwrap_or(f64::NAN);
        Some(SideConvergence { start, converged: steps.is_some(), iterations, final_distance: (end - target).abs() })
    };
    NeutralCheck {
        orbit: orbit.clone(),
        left: side(target - offset),
        right: side(target + offset),
        cap: test.cap,
        tolerance: test.tolerance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorVerdict {
    pub orbit: PeriodicOrbit,
    /// True for neutral orbits admitted because they attract empirically.
    pub neutral: bool,
    pub basin: Option<BasinEstimate>,
    pub basin_error: Option<String>,
    pub critical_points_in_basin: Vec<f64>,
    pub touches_boundary: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingerReport {
    pub map: String,
    pub params: Params,
    pub domain: Interval,
    pub max_period: usize,
    pub orbits: Vec<PeriodicOrbit>,
    pub critical_points: Vec<CriticalPoint>,
    pub attractors: Vec<AttractorVerdict>,
    pub neutral_checks: Vec<NeutralCheck>,
    pub dropped_candidates: usize,
    pub pass: bool,
}

/// Finds periodic orbits, and for every attracting orbit (and every neutral
/// orbit that attracts from at least one side) checks that its immediate
/// basin contains a critical point of `f` or reaches a boundary of `I`.
pub fn singer_check(map: &MapSpec, max_period: usize, settings: &Settings) -> Result<SingerReport> {
    let catalog = find_periodic_orbits(map, max_period, settings.grid_size, settings)?;
    let crit = critical_points(map, settings.grid_size, settings)?;
    let neutral_checks: Vec<NeutralCheck> = catalog
        .with_stability(Stability::Neutral)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|o| neutral_convergence(map, o, settings))
        .collect();

    let mut candidates: Vec<(PeriodicOrbit, bool)> =
        catalog.with_stability(Stability::Attracting).map(|o| (o.clone(), false)).collect();
    candidates.extend(neutral_checks.iter().filter(|c| c.attracts()).map(|c| (c.orbit.clone(), true)));

    let attractors: Vec<AttractorVerdict> = candidates
        .into_par_iter()
        .map(|(orbit, neutral)| match immediate_basin(map, &orbit, settings) {
            Ok(basin) => {
                let inside: Vec<f64> = crit.iter().map(|c| c.x).filter(|&x| basin.contains(x)).collect();
                let touches = basin.touches_boundary(map.domain());
                let pass = !inside.is_empty() || touches;
                AttractorVerdict {
                    orbit,
                    neutral,
                    basin: Some(basin),
                    basin_error: None,
                    critical_points_in_basin: inside,
                    touches_boundary: touches,
                    pass,
                }
            }
            Err(e) => AttractorVerdict {
                orbit,
                neutral,
                basin: None,
                basin_error: Some(e.to_string()),
                critical_points_in_basin: Vec::new(),
                touches_boundary: false,
                pass: false,
            },
        })
        .collect();

    let pass = attractors.iter().all(|a| a.pass);
    Ok(SingerReport {
        map: map.label().to_string(),
        params: map.params().clone(),
        domain: *map.domain(),
        max_period,
        orbits: catalog.orbits,
        critical_points: crit,
        attractors,
        neutral_checks,
        dropped_candidates: catalog.dropped_candidates,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanBlock {
    pub value: f64,
    pub clusters: Vec<Cluster>,
    pub error: Option<String>,
}

/// ω-limit clusters of `x0` for each parameter value, in input order.
pub fn bifurcation_scan<F>(values: &[f64], build: F, x0: f64, settings: &Settings) -> Vec<ScanBlock>
where
    F: Fn(f64) -> Result<MapSpec> + Sync,
{
    values
        .par_iter()
        .map(|&value| {
            let run = build(value).and_then(|m| {
                omega_limit(&m, x0, settings.omega_transient, settings.omega_window, settings.cluster_tol)
            });
            match run {
                Ok(clusters) => ScanBlock { value, clusters, error: None },
                Err(e) => ScanBlock { value, clusters: Vec::new(), error: Some(e.to_string()) },
            }
        })
        .collect()
}
