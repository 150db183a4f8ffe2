use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use singer_core::dynamics::{bifurcation_scan, omega_limit, singer_check, ScanBlock};
use singer_core::minprinciple::{find_nonvanishing_critical_points, minimum_principle_report, ExtremumKind};
use singer_core::schwarzian::{identity_chain_check, negativity_scan, verify_composition_law};
use singer_core::{
    ChainReport, Error, Interval, MapSpec, MinPrincipleReport, NegativityReport, Params, Settings, SingerReport,
};

use crate::config::{ConfigError, RunConfig};
use crate::output::{fmt_f64, fmt_opt, Record};

#[derive(Debug)]
pub enum CommandError {
    Config(ConfigError),
    Numeric(String),
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Config(e)
    }
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        CommandError::Numeric(e.to_string())
    }
}

/// Fields shared by every record, so each line is reproducible on its own.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub command: &'static str,
    pub map: String,
    pub params: Params,
    pub domain: Interval,
    pub seed: u64,
    pub settings: Settings,
}

impl Meta {
    fn new(command: &'static str, config: &RunConfig, params: &Params) -> Self {
        Meta {
            command,
            map: config.source.clone(),
            params: params.clone(),
            domain: config.domain,
            seed: config.seed,
            settings: config.settings.clone(),
        }
    }

    fn param_cells(&self, names: &[String]) -> Vec<String> {
        names.iter().map(|n| self.params.get(n).map_or(String::new(), |v| fmt_f64(*v))).collect()
    }
}

fn for_each_params<T, F>(config: &RunConfig, run: F) -> Result<Vec<T>, CommandError>
where
    T: Send,
    F: Fn(usize, &Params, &MapSpec) -> Result<Vec<T>, CommandError> + Sync,
{
    let sets = config.parameter_sets();
    let maps: Vec<MapSpec> = sets.iter().map(|p| config.map_for(p)).collect::<Result<_, _>>()?;
    let chunks: Vec<Vec<T>> =
        sets.par_iter().zip(maps.par_iter()).enumerate().map(|(i, (p, m))| run(i, p, m)).collect::<Result<_, _>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct CompositionSummary {
    pub checks: usize,
    pub defined: usize,
    pub max_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchwarzianRecord {
    #[serde(flatten)]
    pub meta: Meta,
    pub n: usize,
    pub scan: NegativityReport,
    pub composition: CompositionSummary,
}

pub fn cmd_schwarzian(config: &RunConfig) -> Result<Vec<SchwarzianRecord>, CommandError> {
    let s = &config.settings;
    for_each_params(config, |index, params, map| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(index as u64));
        let dom = map.domain();
        let mut defined = 0;
        let mut max_residual: Option<f64> = None;
        for _ in 0..config.spot_checks {
            let x = rng.gen_range(dom.lo..=dom.hi);
            match verify_composition_law(map, map, x, s) {
                Ok(r) => {
                    defined += 1;
                    max_residual = Some(max_residual.map_or(r, |m| m.max(r)));
                }
                Err(Error::Undefined(_) | Error::NonFinite { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let composition = CompositionSummary { checks: config.spot_checks, defined, max_residual };
        config
            .orders
            .iter()
            .map(|&n| {
                Ok(SchwarzianRecord {
                    meta: Meta::new("schwarzian", config, params),
                    n,
                    scan: negativity_scan(map, n, s.grid_size, s)?,
                    composition: composition.clone(),
                })
            })
            .collect()
    })
}

impl Record for SchwarzianRecord {
    fn csv_header(params: &[String]) -> Vec<String> {
        let mut h = params.to_vec();
        h.extend(
            [
                "n",
                "grid",
                "defined",
                "undefined",
                "min_s",
                "min_x",
                "max_s",
                "max_x",
                "non_negative",
                "verdict",
                "comp_checks",
                "comp_defined",
                "comp_max_residual",
            ]
            .map(String::from),
        );
        h
    }

    fn csv_rows(&self, params: &[String]) -> Vec<Vec<String>> {
        let sc = &self.scan;
        let mut row = self.meta.param_cells(params);
        row.extend([
            self.n.to_string(),
            sc.grid_size.to_string(),
            sc.defined.to_string(),
            sc.undefined.to_string(),
            fmt_opt(sc.min.as_ref().map(|m| m.s)),
            fmt_opt(sc.min.as_ref().map(|m| m.x)),
            fmt_opt(sc.max.as_ref().map(|m| m.s)),
            fmt_opt(sc.max.as_ref().map(|m| m.x)),
            sc.non_negative.to_string(),
            verdict_name(sc),
            self.composition.checks.to_string(),
            self.composition.defined.to_string(),
            fmt_opt(self.composition.max_residual),
        ]);
        vec![row]
    }

    fn text(&self) -> String {
        let sc = &self.scan;
        let range = match (&sc.min, &sc.max) {
            (Some(lo), Some(hi)) => format!("S(f^{}) in [{}, {}]", self.n, fmt_f64(lo.s), fmt_f64(hi.s)),
            _ => format!("S(f^{}) undefined at every sample", self.n),
        };
        let verdict = match sc.verdict {
            singer_core::schwarzian::ScanVerdict::NoCounterexampleOnGrid => {
                "no counterexample found on grid".to_string()
            }
            singer_core::schwarzian::ScanVerdict::CounterexampleFound => {
                format!("{} samples with S >= 0", sc.non_negative)
            }
            singer_core::schwarzian::ScanVerdict::NoDefinedSamples => "no defined samples".to_string(),
        };
        format!(
            "schwarzian {}: {range}; {} undefined of {}; {verdict}; composition law max residual {} over {} points",
            params_text(&self.meta.params),
            sc.undefined,
            sc.grid_size,
            self.composition.max_residual.map_or("n/a".to_string(), fmt_f64),
            self.composition.defined
        )
    }
}

fn verdict_name(sc: &NegativityReport) -> String {
    serde_json::to_value(sc.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn params_text(p: &Params) -> String {
    if p.is_empty() {
        return "(no parameters)".into();
    }
    p.iter().map(|(k, v)| format!("{k}={}", fmt_f64(*v))).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, Serialize)]
pub struct MinPrincipleRecord {
    #[serde(flatten)]
    pub meta: Meta,
    pub passed: bool,
    pub report: MinPrincipleReport,
}

pub fn cmd_minprinciple(config: &RunConfig) -> Result<Vec<MinPrincipleRecord>, CommandError> {
    for_each_params(config, |_, params, map| {
        config
            .orders
            .iter()
            .map(|&n| {
                let report = minimum_principle_report(map, n, &config.settings)?;
                Ok(MinPrincipleRecord {
                    meta: Meta::new("minprinciple", config, params),
                    passed: report.passed(),
                    report,
                })
            })
            .collect()
    })
}

impl Record for MinPrincipleRecord {
    fn csv_header(params: &[String]) -> Vec<String> {
        let mut h = params.to_vec();
        h.extend(
            ["n", "extrema", "local_max", "local_min", "violations", "interval_checks", "interval_failures", "passed"]
                .map(String::from),
        );
        h
    }

    fn csv_rows(&self, params: &[String]) -> Vec<Vec<String>> {
        let r = &self.report;
        let maxima = r.extrema.iter().filter(|e| e.kind == ExtremumKind::LocalMax).count();
        let mut row = self.meta.param_cells(params);
        row.extend([
            r.n.to_string(),
            r.extrema.len().to_string(),
            maxima.to_string(),
            (r.extrema.len() - maxima).to_string(),
            r.violations.len().to_string(),
            r.interval_checks.len().to_string(),
            r.interval_checks.iter().filter(|c| !c.pass).count().to_string(),
            self.passed.to_string(),
        ]);
        vec![row]
    }

    fn text(&self) -> String {
        let r = &self.report;
        let mut s = format!(
            "minprinciple {} n={}: {} extrema of (f^n)', {} violations",
            params_text(&self.meta.params),
            r.n,
            r.extrema.len(),
            r.violations.len()
        );
        for v in &r.violations {
            let kind = match v.kind {
                ExtremumKind::LocalMax => "local max",
                ExtremumKind::LocalMin => "local min",
            };
            s.push_str(&format!("\n  {kind} {} at x = {}", fmt_f64(v.g_value), fmt_f64(v.x)));
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SingerRecord {
    #[serde(flatten)]
    pub meta: Meta,
    pub report: SingerReport,
}

pub fn cmd_singer(config: &RunConfig) -> Result<Vec<SingerRecord>, CommandError> {
    for_each_params(config, |_, params, map| {
        let report = singer_check(map, config.settings.max_period, &config.settings)?;
        Ok(vec![SingerRecord { meta: Meta::new("singer", config, params), report }])
    })
}

impl Record for SingerRecord {
    fn csv_header(params: &[String]) -> Vec<String> {
        let mut h = params.to_vec();
        h.extend(
            [
                "attractors",
                "period",
                "multiplier",
                "stability",
                "neutral",
                "basin",
                "critical_in_basin",
                "touches_boundary",
                "orbit_pass",
                "pass",
            ]
            .map(String::from),
        );
        h
    }

    fn csv_rows(&self, params: &[String]) -> Vec<Vec<String>> {
        let r = &self.report;
        let base = self.meta.param_cells(params);
        if r.attractors.is_empty() {
            let mut row = base;
            row.push("0".into());
            row.extend(std::iter::repeat_n(String::new(), 8));
            row.push(r.pass.to_string());
            return vec![row];
        }
        r.attractors
            .iter()
            .map(|a| {
                let basin = a.basin.as_ref().map_or(String::new(), |b| {
                    b.components
                        .iter()
                        .map(|c| format!("{}:{}", fmt_f64(c.lo), fmt_f64(c.hi)))
                        .collect::<Vec<_>>()
                        .join(";")
                });
                let stability = serde_json::to_value(a.orbit.stability)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default();
                let mut row = base.clone();
                row.extend([
                    r.attractors.len().to_string(),
                    a.orbit.period.to_string(),
                    fmt_f64(a.orbit.multiplier),
                    stability,
                    a.neutral.to_string(),
                    basin,
                    a.critical_points_in_basin.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";"),
                    a.touches_boundary.to_string(),
                    a.pass.to_string(),
                    r.pass.to_string(),
                ]);
                row
            })
            .collect()
    }

    fn text(&self) -> String {
        let r = &self.report;
        let mut s = format!(
            "singer {}: {} periodic orbits, {} attracting; {}",
            params_text(&self.meta.params),
            r.orbits.len(),
            r.attractors.len(),
            if r.pass { "pass" } else { "FAIL" }
        );
        for a in &r.attractors {
            let cps = &a.critical_points_in_basin;
            let crit = if cps.is_empty() {
                "no critical point".to_string()
            } else if cps.len() > 8 {
                format!("{} critical points in [{}, {}]", cps.len(), fmt_f64(cps[0]), fmt_f64(cps[cps.len() - 1]))
            } else {
                format!(
                    "critical point(s) {}",
                    a.critical_points_in_basin.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ")
                )
            };
            s.push_str(&format!(
                "\n  period {} multiplier {}{}: basin holds {crit}{}",
                a.orbit.period,
                fmt_f64(a.orbit.multiplier),
                if a.neutral { " (neutral)" } else { "" },
                if a.touches_boundary { ", reaches boundary" } else { "" }
            ));
        }
        for c in &r.neutral_checks {
            s.push_str(&format!(
                "\n  neutral period {} at {}: attracts empirically = {}",
                c.orbit.period,
                fmt_f64(c.orbit.points[0]),
                c.attracts()
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedPoint {
    pub x: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRecord {
    #[serde(flatten)]
    pub meta: Meta,
    pub n: usize,
    pub degenerate: bool,
    pub checks: Vec<ChainReport>,
    pub skipped: Vec<SkippedPoint>,
}

pub fn cmd_identity(config: &RunConfig) -> Result<Vec<IdentityRecord>, CommandError> {
    let s = &config.settings;
    for_each_params(config, |_, params, map| {
        config
            .orders
            .iter()
            .map(|&n| {
                let set = find_nonvanishing_critical_points(map, n, s.grid_size, s)?;
                let mut checks = Vec::new();
                let mut skipped = Vec::new();
                for &x in &set.points {
                    match identity_chain_check(map, n, x, s) {
                        Ok(c) => checks.push(c),
                        Err(e @ (Error::PreconditionViolated(_) | Error::NonFinite { .. } | Error::Escaped { .. })) => {
                            skipped.push(SkippedPoint { x, reason: e.to_string() })
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                Ok(IdentityRecord {
                    meta: Meta::new("identity", config, params),
                    n,
                    degenerate: set.degenerate,
                    checks,
                    skipped,
                })
            })
            .collect()
    })
}

impl Record for IdentityRecord {
    fn csv_header(params: &[String]) -> Vec<String> {
        let mut h = params.to_vec();
        h.extend(
            [
                "n",
                "x",
                "derivative",
                "constraint_residual",
                "rearrangement_a_residual",
                "rearrangement_b_residual",
                "final_identity_residual",
                "quotient",
                "quotient_sign",
            ]
            .map(String::from),
        );
        h
    }

    fn csv_rows(&self, params: &[String]) -> Vec<Vec<String>> {
        let base = self.meta.param_cells(params);
        self.checks
            .iter()
            .map(|c| {
                let mut row = base.clone();
                row.extend([
                    c.n.to_string(),
                    fmt_f64(c.x),
                    fmt_f64(c.derivative),
                    fmt_f64(c.constraint_residual),
                    fmt_f64(c.rearrangement_a_residual),
                    fmt_f64(c.rearrangement_b_residual),
                    fmt_f64(c.final_identity_residual),
                    fmt_f64(c.quotient),
                    c.quotient_sign.to_string(),
                ]);
                row
            })
            .collect()
    }

    fn text(&self) -> String {
        let worst = self
            .checks
            .iter()
            .map(|c| {
                c.constraint_residual
                    .max(c.rearrangement_a_residual)
                    .max(c.rearrangement_b_residual)
                    .max(c.final_identity_residual)
            })
            .fold(0.0, f64::max);
        let negative = self.checks.iter().filter(|c| c.quotient_sign < 0).count();
        format!(
            "identity {} n={}: {} critical points of (f^{})', worst residual {}, {} negative quotients, {} skipped{}",
            params_text(&self.meta.params),
            self.n,
            self.checks.len(),
            self.n + 1,
            fmt_f64(worst),
            negative,
            self.skipped.len(),
            if self.degenerate { " (degenerate: (f^n)'' vanishes identically)" } else { "" }
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRecord {
    #[serde(flatten)]
    pub meta: Meta,
    pub x0: f64,
    pub clusters: Vec<singer_core::dynamics::Cluster>,
}

pub fn cmd_scan(config: &RunConfig) -> Result<Vec<ScanRecord>, CommandError> {
    let s = &config.settings;
    let x0 = config.x0.unwrap_or(config.domain.lo + 0.3 * config.domain.width());
    let sets = config.parameter_sets();
    let blocks: Vec<ScanBlock> = match &config.sweep {
        Some(sweep) => {
            let values: Vec<f64> = sets.iter().map(|p| p[&sweep.name]).collect();
            bifurcation_scan(
                &values,
                |v| {
                    let mut p = config.fixed.clone();
                    p.insert(sweep.name.clone(), v);
                    MapSpec::new(config.ast.clone(), p, config.domain)
                },
                x0,
                s,
            )
        }
        None => {
            let map = config.map_for(&sets[0])?;
            let clusters = omega_limit(&map, x0, s.omega_transient, s.omega_window, s.cluster_tol)?;
            vec![ScanBlock { value: f64::NAN, clusters, error: None }]
        }
    };
    sets.iter()
        .zip(blocks)
        .map(|(params, block)| match block.error {
            Some(e) => Err(CommandError::Numeric(format!("scan at {}: {e}", params_text(params)))),
            None => Ok(ScanRecord { meta: Meta::new("scan", config, params), x0, clusters: block.clusters }),
        })
        .collect()
}

impl Record for ScanRecord {
    fn csv_header(params: &[String]) -> Vec<String> {
        let mut h = params.to_vec();
        h.extend(["clusters", "index", "point", "count", "spread"].map(String::from));
        h
    }

    fn csv_rows(&self, params: &[String]) -> Vec<Vec<String>> {
        let base = self.meta.param_cells(params);
        self.clusters
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut row = base.clone();
                row.extend([
                    self.clusters.len().to_string(),
                    i.to_string(),
                    fmt_f64(c.center),
                    c.count.to_string(),
                    fmt_f64(c.max - c.min),
                ]);
                row
            })
            .collect()
    }

    fn text(&self) -> String {
        let pts: Vec<String> = self.clusters.iter().map(|c| fmt_f64(c.center)).collect();
        format!("scan {}: {} clusters [{}]", params_text(&self.meta.params), self.clusters.len(), pts.join(", "))
    }
}
