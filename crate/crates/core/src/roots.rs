//! Grid bracketing plus safeguarded Newton refinement.

use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RootKind {
    /// Sign change between neighbouring grid nodes.
    Crossing,
    /// Exact zero on a grid node.
    Node,
    /// Local minimum of `|g|` that touches zero without a sign change.
    Touching,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Root {
    pub x: f64,
    /// Magnitude of `g` at the bracket ends, for relative residual tests.
    pub scale: f64,
    pub converged: bool,
    #[cfg_attr(not(test), allow(dead_code))]
    pub kind: RootKind,
}

/// `g(x)` and `g'(x)`; `None` when not finite.
pub(crate) type Eval1<'a> = dyn Fn(f64) -> Option<(f64, f64)> + Sync + 'a;

/// Root of `g` inside `[a, b]` where `g(a)` and `g(b)` have opposite signs.
/// Newton steps are taken while they stay inside the shrinking bracket;
/// otherwise the bracket is bisected. After `max_newton` hybrid steps plain
/// bisection continues until the bracket collapses.
pub(crate) fn refine_bracket(g: &Eval1<'_>, a: f64, b: f64, ga: f64, gb: f64, max_newton: usize) -> (f64, f64, bool) {
    debug_assert!(ga * gb < 0.0);
    // lo holds g < 0, hi holds g > 0
    let (mut lo, mut hi) = if ga < 0.0 { (a, b) } else { (b, a) };
    let mut x = 0.5 * (a + b);
    let mut dx_old = (b - a).abs();
    let mut dx = dx_old;
    let Some((mut gx, mut dgx)) = g(x) else {
        return (x, f64::NAN, false);
    };
    let tiny = |x: f64| 4.0 * f64::EPSILON * x.abs().max(1.0);
    for _ in 0..max_newton {
        if gx == 0.0 {
            return (x, 0.0, true);
        }
        let newton = x - gx / dgx;
        let inside = newton.is_finite() && (newton - lo) * (newton - hi) < 0.0;
        if inside && (2.0 * gx).abs() <= (dx_old * dgx).abs() {
            dx_old = dx;
            dx = newton - x;
            x = newton;
        } else {
            dx_old = dx;
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        }
        match g(x) {
            Some((v, d)) => {
                gx = v;
                dgx = d;
            }
            None => return (x, f64::NAN, false),
        }
        if gx < 0.0 {
            lo = x;
        } else if gx > 0.0 {
            hi = x;
        }
        if dx.abs() <= tiny(x) {
            return (x, gx, true);
        }
    }
    // bisection to the end
    for _ in 0..200 {
        if (hi - lo).abs() <= tiny(x) || gx == 0.0 {
            break;
        }
        x = 0.5 * (lo + hi);
        match g(x) {
            Some((v, _)) => gx = v,
            None => return (x, f64::NAN, false),
        }
        if gx < 0.0 {
            lo = x;
        } else if gx > 0.0 {
            hi = x;
        }
    }
    (x, gx, true)
}

/// Options for [`grid_roots`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct GridRootOptions {
    pub max_newton: usize,
    /// When set, local minima of `|g|` (no sign change) are searched for
    /// touching roots and accepted if `|g|` falls below this value.
    pub touching_tol: Option<f64>,
}

/// All roots of `g` detected on `grid`, sorted by `x`. `g1` returns
/// `(g, g')` and `g2` returns `(g', g'')`; the latter is only used for
/// touching roots.
pub(crate) fn grid_roots(grid: &[f64], g1: &Eval1<'_>, g2: &Eval1<'_>, opts: GridRootOptions) -> Vec<Root> {
    let samples: Vec<Option<f64>> = grid.par_iter().map(|&x| g1(x).map(|(v, _)| v)).collect();
    let found: Vec<Vec<Root>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            let Some(gi) = samples[i] else { return out };
            if gi == 0.0 {
                out.push(Root { x: grid[i], scale: 0.0, converged: true, kind: RootKind::Node });
                return out;
            }
            if let Some(Some(gn)) = samples.get(i + 1) {
                if gi * gn < 0.0 {
                    let (x, _, ok) = refine_bracket(g1, grid[i], grid[i + 1], gi, *gn, opts.max_newton);
                    out.push(Root { x, scale: gi.abs().max(gn.abs()), converged: ok, kind: RootKind::Crossing });
                }
            }
            if let Some(tol) = opts.touching_tol {
                if let Some(root) = touching_root(grid, &samples, i, g1, g2, tol, opts.max_newton) {
                    out.push(root);
                }
            }
            out
        })
        .collect();
    let mut roots: Vec<Root> = found.into_iter().flatten().collect();
    roots.sort_by(|a, b| a.x.total_cmp(&b.x));
    roots
}

fn touching_root(
    grid: &[f64],
    samples: &[Option<f64>],
    i: usize,
    g1: &Eval1<'_>,
    g2: &Eval1<'_>,
    tol: f64,
    max_newton: usize,
) -> Option<Root> {
    if i == 0 || i + 1 >= grid.len() {
        return None;
    }
    let (l, c, r) = (samples[i - 1]?, samples[i]?, samples[i + 1]?);
    if l * c <= 0.0 || c * r <= 0.0 || c.abs() > l.abs() || c.abs() > r.abs() {
        return None;
    }
    if c.abs() < tol {
        return Some(Root { x: grid[i], scale: 0.0, converged: true, kind: RootKind::Touching });
    }
    // minimise |g| by locating the zero of g' between the neighbours
    let (dl, _) = g2(grid[i - 1])?;
    let (dr, _) = g2(grid[i + 1])?;
    if dl * dr >= 0.0 {
        return None;
    }
    let (x, _, ok) = refine_bracket(g2, grid[i - 1], grid[i + 1], dl, dr, max_newton);
    let (v, _) = g1(x)?;
    (ok && v.abs() < tol).then_some(Root { x, scale: 0.0, converged: true, kind: RootKind::Touching })
}
