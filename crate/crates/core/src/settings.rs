use serde::{Deserialize, Serialize};

/// Every numeric knob used by the analyses. Reports embed the instance they
/// were produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    /// Uniform grid size for scans and bracketing.
    pub grid_size: usize,
    pub max_period: usize,
    /// `|f'| <= vanish_threshold` counts as a vanishing derivative.
    pub vanish_threshold: f64,
    /// Accepted relative residual for a refined zero of `(f^n)''`.
    pub crit_tol: f64,
    /// Tolerance for ties and sign decisions on extremum values.
    pub tie_tol: f64,
    pub newton_max_iter: usize,
    /// `||multiplier| - 1| <= neutral_band` is classified neutral.
    pub neutral_band: f64,
    /// Candidate periodic points closer than this are the same point.
    pub dedupe_tol: f64,
    /// Candidates this close to a lower-period orbit are treated as that orbit.
    pub merge_tol: f64,
    /// A point moving less than this under `f^d` has period dividing `d`.
    pub period_tol: f64,
    /// Largest accepted `|f(p_i) - p_{i+1}|` along an orbit.
    pub orbit_tol: f64,
    /// Grid-level `|f^p(x) - x|` below which a touching root is a candidate.
    pub tangency_tol: f64,
    /// Iteration cap (in steps of `f^p`) for the attracting-basin test.
    pub basin_cap: usize,
    pub basin_tol: f64,
    /// Iteration cap and tolerance for neutral orbits.
    pub neutral_cap: usize,
    pub neutral_tol: f64,
    /// Width to which basin endpoints are resolved.
    pub resolution: f64,
    pub omega_transient: usize,
    pub omega_window: usize,
    pub cluster_tol: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            grid_size: 4096,
            max_period: 8,
            vanish_threshold: 1e-9,
            crit_tol: 1e-9,
            tie_tol: 1e-12,
            newton_max_iter: 50,
            neutral_band: 1e-6,
            dedupe_tol: 1e-8,
            merge_tol: 1e-4,
            period_tol: 1e-6,
            orbit_tol: 1e-9,
            tangency_tol: 1e-10,
            basin_cap: 10_000,
            basin_tol: 1e-6,
            neutral_cap: 1_000_000,
            neutral_tol: 5e-3,
            resolution: 1e-8,
            omega_transient: 10_000,
            omega_window: 64,
            cluster_tol: 1e-6,
        }
    }
}
