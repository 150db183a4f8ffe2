//! Third-order jets.
//!
//! A [`Jet3`] carries `(g, g', g'', g''')` at a point. Arithmetic follows the
//! Leibniz rule truncated at order three and [`compose`] is the third-order
//! chain rule, so folding it along an orbit produces the derivatives of an
//! iterate `f^n` without ever expanding `f^n` symbolically.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::MapSpec;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Jet3 {
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

impl Jet3 {
    pub const fn new(v0: f64, v1: f64, v2: f64, v3: f64) -> Self {
        Jet3 { v0, v1, v2, v3 }
    }

    /// The independent variable at `x0`.
    pub const fn var(x0: f64) -> Self {
        Jet3::new(x0, 1.0, 0.0, 0.0)
    }

    pub const fn constant(c: f64) -> Self {
        Jet3::new(c, 0.0, 0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.v0.is_finite() && self.v1.is_finite() && self.v2.is_finite() && self.v3.is_finite()
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.v0, self.v1, self.v2, self.v3]
    }

    /// `self^k` for a constant real exponent.
    pub fn pow_const(self, k: f64) -> Self {
        let u = self.v0;
        // Falling factorials k, k(k-1), k(k-1)(k-2). A zero factor means the
        // derivative vanishes identically, even where u^(k-m) is infinite.
        let f1 = k;
        let f2 = k * (k - 1.0);
        let f3 = f2 * (k - 2.0);
        let coeff = |ff: f64, m: f64| if ff == 0.0 { 0.0 } else { ff * u.powf(k - m) };
        let outer = Jet3::new(u.powf(k), coeff(f1, 1.0), coeff(f2, 2.0), coeff(f3, 3.0));
        compose(outer, self)
    }

    pub fn apply(self, func: Elementary) -> Self {
        compose(func.derivatives_at(self.v0), self)
    }

    /// The Schwarzian `v3/v1 - 3/2 (v2/v1)^2`, or `None` when `|v1|` is at or
    /// below `vanish_threshold`.
    pub fn schwarzian(&self, vanish_threshold: f64) -> Option<f64> {
        if self.v1.abs() <= vanish_threshold {
            return None;
        }
        let q2 = self.v2 / self.v1;
        Some(self.v3 / self.v1 - 1.5 * q2 * q2)
    }
}

impl fmt::Display for Jet3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet3({}, {}, {}, {})", self.v0, self.v1, self.v2, self.v3)
    }
}

impl Add for Jet3 {
    type Output = Jet3;
    fn add(self, b: Jet3) -> Jet3 {
        Jet3::new(self.v0 + b.v0, self.v1 + b.v1, self.v2 + b.v2, self.v3 + b.v3)
    }
}

impl Sub for Jet3 {
    type Output = Jet3;
    fn sub(self, b: Jet3) -> Jet3 {
        Jet3::new(self.v0 - b.v0, self.v1 - b.v1, self.v2 - b.v2, self.v3 - b.v3)
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        Jet3::new(-self.v0, -self.v1, -self.v2, -self.v3)
    }
}

impl Mul for Jet3 {
    type Output = Jet3;
    fn mul(self, b: Jet3) -> Jet3 {
        let a = self;
        Jet3::new(
            a.v0 * b.v0,
            a.v1 * b.v0 + a.v0 * b.v1,
            a.v2 * b.v0 + 2.0 * a.v1 * b.v1 + a.v0 * b.v2,
            a.v3 * b.v0 + 3.0 * a.v2 * b.v1 + 3.0 * a.v1 * b.v2 + a.v0 * b.v3,
        )
    }
}

impl Div for Jet3 {
    type Output = Jet3;
    /// Quotient rule obtained from `a = q*b`; a zero denominator yields a
    /// non-finite jet.
    fn div(self, b: Jet3) -> Jet3 {
        let a = self;
        let q0 = a.v0 / b.v0;
        let q1 = (a.v1 - q0 * b.v1) / b.v0;
        let q2 = (a.v2 - 2.0 * q1 * b.v1 - q0 * b.v2) / b.v0;
        let q3 = (a.v3 - 3.0 * q2 * b.v1 - 3.0 * q1 * b.v2 - q0 * b.v3) / b.v0;
        Jet3::new(q0, q1, q2, q3)
    }
}

/// Jet of `outer ∘ inner` at the base point of `inner`. The caller guarantees
/// that `outer` was taken at `inner.v0`.
pub fn compose(outer: Jet3, inner: Jet3) -> Jet3 {
    let d1 = inner.v1;
    let d2 = inner.v2;
    Jet3::new(
        outer.v0,
        outer.v1 * d1,
        outer.v2 * d1 * d1 + outer.v1 * d2,
        outer.v3 * d1 * d1 * d1 + 3.0 * outer.v2 * d1 * d2 + outer.v1 * inner.v3,
    )
}

/// Smooth functions the expression language can call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Elementary {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Elementary {
    pub const ALL: [Elementary; 6] =
        [Elementary::Sin, Elementary::Cos, Elementary::Exp, Elementary::Log, Elementary::Sqrt, Elementary::Tanh];

    pub fn name(self) -> &'static str {
        match self {
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Exp => "exp",
            Elementary::Log => "log",
            Elementary::Sqrt => "sqrt",
            Elementary::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn eval(self, u: f64) -> f64 {
        match self {
            Elementary::Sin => u.sin(),
            Elementary::Cos => u.cos(),
            Elementary::Exp => u.exp(),
            Elementary::Log => u.ln(),
            Elementary::Sqrt => u.sqrt(),
            Elementary::Tanh => u.tanh(),
        }
    }

    /// `(φ, φ', φ'', φ''')` at `u`.
    pub fn derivatives_at(self, u: f64) -> Jet3 {
        match self {
            // black_box keeps the pair from being fused into a sincos call, which may round
            // differently from `eval` and break bit equality of the value component
            Elementary::Sin => {
                let (s, c) = (u.sin(), std::hint::black_box(u).cos());
                Jet3::new(s, c, -s, -c)
            }
            Elementary::Cos => {
                let (s, c) = (std::hint::black_box(u).sin(), u.cos());
                Jet3::new(c, -s, -c, s)
            }
            Elementary::Exp => {
                let e = u.exp();
                Jet3::new(e, e, e, e)
            }
            Elementary::Log => {
                let r = 1.0 / u;
                Jet3::new(u.ln(), r, -r * r, 2.0 * r * r * r)
            }
            Elementary::Sqrt => {
                let s = u.sqrt();
                let d1 = 0.5 / s;
                let d2 = -0.5 * d1 / u;
                let d3 = -1.5 * d2 / u;
                Jet3::new(s, d1, d2, d3)
            }
            Elementary::Tanh => {
                let t = u.tanh();
                let s = 1.0 - t * t;
                Jet3::new(t, s, -2.0 * t * s, s * (4.0 * t * t - 2.0 * s))
            }
        }
    }
}

/// Jet of `f^n` at `x`, folding [`compose`] left along the forward orbit
/// `x, f(x), ..., f^{n-1}(x)`.
pub fn iterate_jet(map: &MapSpec, x: f64, n: usize) -> Result<Jet3> {
    if n == 0 {
        return Err(Error::invalid("iterate order must be at least 1"));
    }
    let mut acc = map.jet_at(x)?;
    for step in 1..n {
        let y = acc.v0;
        if !map.domain().contains_closure(y) {
            return Err(Error::Escaped { x: y, step });
        }
        acc = compose(map.jet_at(y)?, acc);
    }
    Ok(acc)
}

/// The orbit `x, f(x), ..., f^{n-1}(x)` together with the jet of `f` at each
/// point, or an error if the orbit escapes or hits a singular point.
pub fn orbit_jets(map: &MapSpec, x: f64, n: usize) -> Result<Vec<Jet3>> {
    let mut out = Vec::with_capacity(n);
    let mut y = x;
    for step in 0..n {
        if !map.domain().contains_closure(y) {
            return Err(Error::Escaped { x: y, step });
        }
        let j = map.jet_at(y)?;
        y = j.v0;
        out.push(j);
    }
    Ok(out)
}

/// Jet of `f^n` at `x` built by folding from the other end of the orbit:
/// `f^n = (f^{n-1} ∘ ... ) ∘ f` grouped right to left. Used to cross-check
/// associativity of the fold.
pub fn iterate_jet_right_fold(map: &MapSpec, x: f64, n: usize) -> Result<Jet3> {
    if n == 0 {
        return Err(Error::invalid("iterate order must be at least 1"));
    }
    let jets = orbit_jets(map, x, n)?;
    // Derivative of the tail map f^{n-k} at x_k, accumulated from the end.
    let mut tail = *jets.last().expect("n >= 1");
    for j in jets.iter().rev().skip(1) {
        tail = compose(tail, *j);
    }
    Ok(tail)
}
