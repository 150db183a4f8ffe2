use std::fmt;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use singer_core::expr::parse_str;
use singer_core::{Ast, Interval, MapSpec, Params, Settings};

/// A configuration problem; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Map expression in x, e.g. "mu*x*(1-x)"
    #[arg(long)]
    pub map: String,

    /// Parameter binding NAME=VALUE (repeatable)
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,

    /// Parameter sweep NAME=START:STOP:STEP
    #[arg(long, value_name = "NAME=START:STOP:STEP")]
    pub sweep: Option<String>,

    /// Domain as a,b or with brackets, e.g. "(0,1]"; defaults to 0,1
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,

    /// Iterate order
    #[arg(long)]
    pub n: Option<usize>,

    /// Inclusive iterate range A:B
    #[arg(long = "n-range", value_name = "A:B")]
    pub n_range: Option<String>,

    #[arg(long)]
    pub max_period: Option<usize>,

    /// Grid size for scans and bracketing
    #[arg(long)]
    pub grid: Option<usize>,

    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,

    /// Write output here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Seed for randomly placed spot checks
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Starting point for the scan subcommand (default: 30% into the domain)
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,

    /// Composition-law spot checks per parameter value
    #[arg(long, default_value_t = 64)]
    pub spot_checks: usize,

    #[arg(long)]
    pub vanish_threshold: Option<f64>,
    #[arg(long)]
    pub crit_tol: Option<f64>,
    #[arg(long)]
    pub neutral_band: Option<f64>,
    #[arg(long)]
    pub basin_cap: Option<usize>,
    #[arg(long)]
    pub neutral_cap: Option<usize>,
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long)]
    pub transient: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let bad = || ConfigError(format!("sweep must look like name=start:stop:step, got {text:?}"));
        let (name, range) = text.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        let [start, stop, step] = parts.as_slice() else { return Err(bad()) };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        let sweep = Sweep { name: name.trim().to_string(), start: num(start)?, stop: num(stop)?, step: num(step)? };
        if sweep.step.is_nan() || sweep.step <= 0.0 {
            return Err(ConfigError(format!("sweep step must be positive, got {}", sweep.step)));
        }
        if sweep.start > sweep.stop {
            return Err(ConfigError(format!("sweep start {} exceeds stop {}", sweep.start, sweep.stop)));
        }
        Ok(sweep)
    }

    /// `start + k*step` up to `stop`, rounded to 12 decimals so that the
    /// printed values are the intended ones.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| ((self.start + k as f64 * self.step) * 1e12).round() / 1e12).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: String,
    pub ast: Ast,
    pub fixed: Params,
    pub sweep: Option<Sweep>,
    pub domain: Interval,
    pub orders: Vec<usize>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub x0: Option<f64>,
    pub spot_checks: usize,
    pub settings: Settings,
    pub warnings: Vec<String>,
}

fn parse_orders(n: Option<usize>, range: Option<&str>) -> Result<Vec<usize>, ConfigError> {
    let orders = match (n, range) {
        (Some(_), Some(_)) => return Err(ConfigError("use either --n or --n-range, not both".into())),
        (Some(n), None) => vec![n],
        (None, Some(r)) => {
            let bad = || ConfigError(format!("n-range must look like a:b, got {r:?}"));
            let (a, b) = r.split_once(':').ok_or_else(bad)?;
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            (a..=b).collect()
        }
        (None, None) => vec![1],
    };
    if orders.contains(&0) {
        return Err(ConfigError("iterate order n must be at least 1".into()));
    }
    Ok(orders)
}

impl RunConfig {
    pub fn from_args(args: &CommonArgs) -> Result<Self, ConfigError> {
        let ast = parse_str(&args.map).map_err(|e| ConfigError(format!("--map: {e}")))?;
        let mut fixed = Params::new();
        for p in &args.params {
            let (name, value) = p
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("--param must look like name=value, got {p:?}")))?;
            let value: f64 =
                value.trim().parse().map_err(|_| ConfigError(format!("--param {name}: bad value {value:?}")))?;
            fixed.insert(name.trim().to_string(), value);
        }
        let sweep = args.sweep.as_deref().map(Sweep::parse).transpose()?;
        let mut warnings = Vec::new();
        let domain = match &args.domain {
            Some(d) => Interval::parse(d).map_err(|e| ConfigError(format!("--domain: {e}")))?,
            None => {
                warnings.push("no --domain given, using [0, 1]".to_string());
                Interval::closed(0.0, 1.0).expect("valid interval")
            }
        };
        let orders = parse_orders(args.n, args.n_range.as_deref())?;

        let mut settings = Settings::default();
        if let Some(g) = args.grid {
            if g < 16 {
                return Err(ConfigError("--grid must be at least 16".into()));
            }
            settings.grid_size = g;
        }
        if let Some(p) = args.max_period {
            if p == 0 {
                return Err(ConfigError("--max-period must be at least 1".into()));
            }
            settings.max_period = p;
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(ConfigError(format!("--{name} must be positive")))
            }
        };
        if let Some(v) = args.vanish_threshold {
            settings.vanish_threshold = positive("vanish-threshold", v)?;
        }
        if let Some(v) = args.crit_tol {
            settings.crit_tol = positive("crit-tol", v)?;
        }
        if let Some(v) = args.neutral_band {
            settings.neutral_band = positive("neutral-band", v)?;
        }
        if let Some(v) = args.resolution {
            settings.resolution = positive("resolution", v)?;
        }
        if let Some(v) = args.basin_cap {
            settings.basin_cap = v.max(1);
        }
        if let Some(v) = args.neutral_cap {
            settings.neutral_cap = v.max(1);
        }
        if let Some(v) = args.transient {
            settings.omega_transient = v.max(1);
        }
        if let Some(v) = args.window {
            settings.omega_window = v.max(1);
        }

        let config = RunConfig {
            source: args.map.clone(),
            ast,
            fixed,
            sweep,
            domain,
            orders,
            format: args.format,
            out: args.out.clone(),
            seed: args.seed,
            x0: args.x0,
            spot_checks: args.spot_checks,
            settings,
            warnings,
        };
        // every parameter in the expression must be bound by --param or --sweep
        for name in config.ast.parameters() {
            let swept = config.sweep.as_ref().is_some_and(|s| s.name == name);
            if !swept && !config.fixed.contains_key(name) {
                return Err(ConfigError(format!("parameter {name:?} is not bound; pass --param {name}=VALUE")));
            }
        }
        Ok(config)
    }

    /// Parameter bindings for each run, in sweep order.
    pub fn parameter_sets(&self) -> Vec<Params> {
        match &self.sweep {
            None => vec![self.fixed.clone()],
            Some(s) => s
                .values()
                .into_iter()
                .map(|v| {
                    let mut p = self.fixed.clone();
                    p.insert(s.name.clone(), v);
                    p
                })
                .collect(),
        }
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.fixed.keys().cloned().collect();
        if let Some(s) = &self.sweep {
            if !names.contains(&s.name) {
                names.push(s.name.clone());
                names.sort();
            }
        }
        names
    }

    pub fn map_for(&self, params: &Params) -> Result<MapSpec, ConfigError> {
        MapSpec::new(self.ast.clone(), params.clone(), self.domain).map_err(|e| ConfigError(e.to_string()))
    }
}
