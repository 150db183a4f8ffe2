//! Schwarzian derivatives of maps and their iterates.
//!
//! `Sf = f'''/f' - 3/2 (f''/f')^2` wherever `f' != 0`. Two independent routes
//! compute `S(f^n)`: directly from the jet of the iterate, and by summing the
//! composition law along the orbit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::MapSpec;
use crate::jet::{compose, iterate_jet, orbit_jets, Jet3};
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchwarzianValue {
    pub value: f64,
    /// False when the derivative of the iterate vanishes; `value` is then NaN.
    pub defined: bool,
}

impl SchwarzianValue {
    pub fn defined(value: f64) -> Self {
        SchwarzianValue { value, defined: true }
    }

    pub fn undefined() -> Self {
        SchwarzianValue { value: f64::NAN, defined: false }
    }

    pub fn get(&self) -> Option<f64> {
        self.defined.then_some(self.value)
    }

    fn from_jet(j: &Jet3, vanish_threshold: f64) -> Self {
        j.schwarzian(vanish_threshold).map_or_else(Self::undefined, Self::defined)
    }
}

/// `S(f^n)(x)` from the jet of `f^n`.
pub fn schwarzian_at(map: &MapSpec, x: f64, n: usize, settings: &Settings) -> Result<SchwarzianValue> {
    let j = iterate_jet(map, x, n)?;
    Ok(SchwarzianValue::from_jet(&j, settings.vanish_threshold))
}

/// `S(f^n)(x)` as `sum_k Sf(x_k) ((f^k)'(x))^2` over the orbit `x_k = f^k(x)`,
/// which is the composition law unrolled. Uses only jets of `f` itself.
pub fn schwarzian_iterate_recursive(map: &MapSpec, x: f64, n: usize, settings: &Settings) -> Result<SchwarzianValue> {
    if n == 0 {
        return Err(Error::invalid("iterate order must be at least 1"));
    }
    let mut slope = 1.0;
    let mut total = 0.0;
    for j in orbit_jets(map, x, n)? {
        let Some(s) = j.schwarzian(settings.vanish_threshold) else {
            return Ok(SchwarzianValue::undefined());
        };
        total += s * slope * slope;
        slope *= j.v1;
    }
    if slope.abs() <= settings.vanish_threshold {
        return Ok(SchwarzianValue::undefined());
    }
    Ok(SchwarzianValue::defined(total))
}

/// Relative residual of `S(h∘g)(x) = Sh(g(x)) g'(x)^2 + Sg(x)`.
///
/// The left side comes from the jet of the substituted expression `h(g(x))`;
/// the right side from separate jets of `g` at `x` and `h` at `g(x)`.
pub fn verify_composition_law(h: &MapSpec, g: &MapSpec, x: f64, settings: &Settings) -> Result<f64> {
    let t = settings.vanish_threshold;
    let jg = g.jet_at(x)?;
    let jh = h.jet_at(jg.v0)?;
    let (Some(sg), Some(sh)) = (jg.schwarzian(t), jh.schwarzian(t)) else {
        return Err(Error::Undefined(format!("g'(x) or h'(g(x)) vanishes at x = {x}")));
    };
    let composite = MapSpec::compose(h, g).jet_at(x)?;
    let lhs = composite.schwarzian(t).ok_or_else(|| Error::Undefined(format!("(h∘g)'(x) vanishes at x = {x}")))?;
    let rhs = sh * jg.v1 * jg.v1 + sg;
    Ok((lhs - rhs).abs() / (1.0 + lhs.abs()))
}

/// Step-by-step residuals of the identity chain at a non-vanishing critical
/// point `x` of `(f^{n+1})'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub n: usize,
    pub x: f64,
    /// `(f^{n+1})'(x)` and `(f^{n+1})''(x)`.
    pub derivative: f64,
    pub second_derivative: f64,
    /// `(f^n)''(f x) f'(x)^2 = -(f^n)'(f x) f''(x)`.
    pub constraint_residual: f64,
    /// Quotient rewritten with the `-(f''/f')^2` substitution.
    pub rearrangement_a_residual: f64,
    /// Quotient rewritten with the `-((f^n)''/(f^n)')^2 f'^2` substitution.
    pub rearrangement_b_residual: f64,
    /// Quotient against `S(f^n)(f x) f'(x)^2 + Sf(x)`.
    pub final_identity_residual: f64,
    /// `(f^{n+1})'''(x) / (f^{n+1})'(x)`.
    pub quotient: f64,
    pub quotient_sign: i8,
    /// `S(f^{n+1})(x)`, equal to the quotient at such points.
    pub schwarzian_of_iterate: f64,
}

fn rel(diff: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        diff.abs()
    } else {
        diff.abs() / scale
    }
}

pub fn identity_chain_check(map: &MapSpec, n: usize, x: f64, settings: &Settings) -> Result<ChainReport> {
    if n == 0 {
        return Err(Error::invalid("identity chain needs n >= 1"));
    }
    let f = map.jet_at(x)?;
    let fx = f.v0;
    if !map.domain().contains_closure(fx) {
        return Err(Error::Escaped { x: fx, step: 1 });
    }
    let g = iterate_jet(map, fx, n)?;
    let whole = compose(g, f);

    // the two terms whose sum is (f^{n+1})''
    let curvature = g.v2 * f.v1 * f.v1;
    let slope_term = g.v1 * f.v2;
    let second_scale = curvature.abs() + slope_term.abs();
    if whole.v1.abs() <= settings.vanish_threshold {
        return Err(Error::PreconditionViolated(format!("(f^{})'({x}) vanishes", n + 1)));
    }
    if whole.v2.abs() > settings.crit_tol * second_scale {
        return Err(Error::PreconditionViolated(format!(
            "(f^{})''({x}) = {} is not zero relative to {second_scale}",
            n + 1,
            whole.v2
        )));
    }
    if g.v1.abs() <= settings.vanish_threshold || f.v1.abs() <= settings.vanish_threshold {
        return Err(Error::PreconditionViolated(format!("a factor of (f^{})'({x}) vanishes", n + 1)));
    }

    let constraint_residual = rel(curvature + slope_term, second_scale);

    let quotient = whole.v3 / whole.v1;
    let outer_third = g.v3 / g.v1 * f.v1 * f.v1;
    let inner_third = f.v3 / f.v1;
    let inner_ratio = f.v2 / f.v1;
    let outer_ratio = g.v2 / g.v1;

    let a_sq = 3.0 * inner_ratio * inner_ratio;
    let route_a = outer_third - a_sq + inner_third;
    let a_scale = outer_third.abs() + a_sq + inner_third.abs();

    let b_sq = 3.0 * outer_ratio * outer_ratio * f.v1 * f.v1;
    let route_b = outer_third - b_sq + inner_third;
    let b_scale = outer_third.abs() + b_sq + inner_third.abs();

    let s_outer = outer_third / (f.v1 * f.v1) - 1.5 * outer_ratio * outer_ratio;
    let s_inner = inner_third - 1.5 * inner_ratio * inner_ratio;
    let route_final = s_outer * f.v1 * f.v1 + s_inner;
    let final_scale = 0.5 * (a_scale + b_scale);

    Ok(ChainReport {
        n,
        x,
        derivative: whole.v1,
        second_derivative: whole.v2,
        constraint_residual,
        rearrangement_a_residual: rel(quotient - route_a, a_scale),
        rearrangement_b_residual: rel(quotient - route_b, b_scale),
        final_identity_residual: rel(quotient - route_final, final_scale),
        quotient,
        quotient_sign: sign_of(quotient),
        schwarzian_of_iterate: whole.schwarzian(settings.vanish_threshold).unwrap_or(f64::NAN),
    })
}

pub(crate) fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVerdict {
    /// Every defined sample was negative. Not a proof.
    NoCounterexampleOnGrid,
    CounterexampleFound,
    NoDefinedSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub s: f64,
}

/// Grid sampling of `S(f^n)`: a heuristic, not a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityReport {
    pub n: usize,
    pub grid_size: usize,
    pub defined: usize,
    pub undefined: usize,
    pub min: Option<Sample>,
    pub max: Option<Sample>,
    pub non_negative: usize,
    /// First few samples with `S >= 0`, in grid order.
    pub witnesses: Vec<Sample>,
    pub verdict: ScanVerdict,
}

const MAX_WITNESSES: usize = 16;

pub fn negativity_scan(map: &MapSpec, n: usize, grid_size: usize, settings: &Settings) -> Result<NegativityReport> {
    if grid_size < 2 {
        return Err(Error::invalid("negativity scan needs grid_size >= 2"));
    }
    if n == 0 {
        return Err(Error::invalid("iterate order must be at least 1"));
    }
    let grid = map.domain().grid(grid_size);
    let values: Vec<Option<f64>> =
        grid.par_iter().map(|&x| schwarzian_at(map, x, n, settings).ok().and_then(|s| s.get())).collect();

    let mut report = NegativityReport {
        n,
        grid_size,
        defined: 0,
        undefined: 0,
        min: None,
        max: None,
        non_negative: 0,
        witnesses: Vec::new(),
        verdict: ScanVerdict::NoDefinedSamples,
    };
    for (&x, v) in grid.iter().zip(&values) {
        let Some(s) = *v else {
            report.undefined += 1;
            continue;
        };
        report.defined += 1;
        if report.min.as_ref().is_none_or(|m| s < m.s) {
            report.min = Some(Sample { x, s });
        }
        if report.max.as_ref().is_none_or(|m| s > m.s) {
            report.max = Some(Sample { x, s });
        }
        if s >= 0.0 {
            report.non_negative += 1;
            if report.witnesses.len() < MAX_WITNESSES {
                report.witnesses.push(Sample { x, s });
            }
        }
    }
    report.verdict = if report.defined == 0 {
        ScanVerdict::NoDefinedSamples
    } else if report.non_negative == 0 {
        ScanVerdict::NoCounterexampleOnGrid
    } else {
        ScanVerdict::CounterexampleFound
    };
    Ok(report)
}
