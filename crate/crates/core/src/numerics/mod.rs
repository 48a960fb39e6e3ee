//! One-dimensional search, simplex-constrained ascent and Gauss quadrature.

mod golden;
pub mod quadrature;
mod simplex;

pub use golden::{golden_section_max, GoldenResult, SearchSpec, GOLDEN};
pub use simplex::{project_simplex, projected_gradient_ascent, AscentResult, AscentSpec};

/// Default relative stopping threshold for the outer solvers.
pub const DEFAULT_EPS: f64 = 1e-3;

/// Finds a root of `g` in `[a, b]` by bisection, given `g(a)` and `g(b)` of opposite sign.
pub fn bisect<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64, xtol: f64) -> Option<f64> {
    let mut ga = g(a);
    let gb = g(b);
    if ga == 0.0 {
        return Some(a);
    }
    if gb == 0.0 {
        return Some(b);
    }
    if ga.signum() == gb.signum() || !ga.is_finite() || !gb.is_finite() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return Some(m);
        }
        let gm = g(m);
        if gm == 0.0 {
            return Some(m);
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}
