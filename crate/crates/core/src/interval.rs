use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded real interval with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!("interval endpoints must be finite, got {lo}, {hi}")));
        }
        if lo >= hi {
            return Err(Error::invalid(format!("interval needs lo < hi, got {lo}, {hi}")));
        }
        Ok(Interval { lo, hi, lo_closed, hi_closed })
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, false, false)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    /// Membership in the closure, with a slack proportional to the width so
    /// that rounding at an endpoint does not count as leaving the interval.
    pub fn contains_closure(&self, x: f64) -> bool {
        let slack = 1e-12 * self.width().max(1.0);
        x >= self.lo - slack && x <= self.hi + slack
    }

    /// `n` uniformly spaced sample points. Closed ends are sampled; open
    /// ends are replaced by the nearest interior grid node.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        assert!(n >= 2, "grid needs at least two points");
        let lead = usize::from(!self.lo_closed);
        let trail = usize::from(!self.hi_closed);
        let cells = (n - 1 + lead + trail) as f64;
        let h = self.width() / cells;
        (0..n)
            .map(|i| {
                let k = i + lead;
                if k as f64 == cells {
                    self.hi
                } else {
                    self.lo + k as f64 * h
                }
            })
            .collect()
    }

    /// Parses `a,b` (closed) or bracketed forms such as `(a,b]`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let (lo_closed, t) = match t.chars().next() {
            Some('[') => (true, &t[1..]),
            Some('(') => (false, &t[1..]),
            _ => (true, t),
        };
        let (hi_closed, t) = match t.chars().last() {
            Some(']') => (true, &t[..t.len() - 1]),
            Some(')') => (false, &t[..t.len() - 1]),
            _ => (true, t),
        };
        let mut parts = t.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::invalid(format!("domain must look like a,b; got {text:?}")));
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad domain endpoint {s:?}")));
        Self::new(num(a)?, num(b)?, lo_closed, hi_closed)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}
