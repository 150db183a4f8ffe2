//! Schwarzian derivatives, the Minimum Principle for `(f^n)'`, and empirical
//! checks of Singer's theorem for one-dimensional maps defined by
//! expressions.
//!
//! Every derivative of an iterate comes from third-order jets pushed along
//! the orbit, so `S(f^n)` costs `O(n)` per point.
//!
//! ```
//! use singer_core::{Interval, MapSpec, Settings, schwarzian::schwarzian_at};
//!
//! let f = MapSpec::parse("mu*x*(1-x)", &[("mu", 3.8)], Interval::closed(0.0, 1.0)?)?;
//! let s = schwarzian_at(&f, 0.25, 1, &Settings::default())?;
//! assert!((s.value + 24.0).abs() < 1e-12);
//! # Ok::<(), singer_core::Error>(())
//! ```

pub mod dynamics;
pub mod error;
pub mod expr;
pub mod interval;
pub mod jet;
pub mod minprinciple;
mod roots;
pub mod schwarzian;
pub mod settings;

pub use dynamics::{BasinEstimate, PeriodicOrbit, SingerReport, Stability};
pub use error::{Error, Result};
pub use expr::{Ast, MapSpec, Params};
pub use interval::Interval;
pub use jet::{compose, iterate_jet, Jet3};
pub use minprinciple::{DerivExtremum, MinPrincipleReport};
pub use schwarzian::{ChainReport, NegativityReport, SchwarzianValue};
pub use settings::Settings;
