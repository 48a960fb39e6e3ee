//! Projected gradient ascent on the scaled simplex `{x >= 0, sum(x) = budget}`.

use crate::error::{Error, Result};

/// Euclidean projection of `y` onto `{x >= 0, sum(x) = budget}` by sort-and-threshold.
pub fn project_simplex(y: &[f64], budget: f64) -> Vec<f64> {
    if y.is_empty() {
        return Vec::new();
    }
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut shift = u[0] - budget;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - budget) / (j + 1) as f64;
        if uj - t > 0.0 {
            shift = t;
        }
    }
    y.iter().map(|&v| (v - shift).max(0.0)).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct AscentSpec {
    pub budget: f64,
    /// Stop once the norm of `x - proj(x + grad)` falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl AscentSpec {
    pub fn new(budget: f64, tol: f64) -> Self {
        Self {
            budget,
            tol,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub projected_gradient_norm: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn projected_gradient(x: &[f64], g: &[f64], budget: f64) -> f64 {
    let moved: Vec<f64> = x.iter().zip(g).map(|(a, b)| a + b).collect();
    let p = project_simplex(&moved, budget);
    let d: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
    norm(&d)
}

/// Barzilai-Borwein step `sᵀs / (−sᵀy)` from the last move `s` and the change
/// `y` in the gradient; `None` when the pair shows no curvature.
fn spectral_step(x: &[f64], g: &[f64], px: &[f64], pg: &[f64]) -> Option<f64> {
    let (mut ss, mut sy) = (0.0, 0.0);
    for i in 0..x.len() {
        let si = x[i] - px[i];
        ss += si * si;
        sy += si * (g[i] - pg[i]);
    }
    let step = ss / -sy;
    (sy < 0.0 && step.is_finite() && step > 0.0).then_some(step)
}

/// `g · (xn − x)` for two points of the simplex. The moves sum to zero, so
/// the mean of `g` over the support is removed first; otherwise rounding in
/// the sum, multiplied by the common part of `g`, swamps the gain near the
/// optimum.
fn tangential_dot(g: &[f64], xn: &[f64], x: &[f64]) -> f64 {
    let support: Vec<usize> = (0..g.len())
        .filter(|&i| xn[i] > 0.0 || x[i] > 0.0)
        .collect();
    if support.is_empty() {
        return 0.0;
    }
    let mean = support.iter().map(|&i| g[i]).sum::<f64>() / support.len() as f64;
    support
        .iter()
        .map(|&i| (g[i] - mean) * (xn[i] - x[i]))
        .sum()
}

/// Near the optimum `f` stops resolving the gain, so a step whose change in
/// `f` is at rounding level is taken when the slope along it at the new point
/// shows no overshoot.
fn flat_but_uphill<G: Fn(&[f64]) -> Vec<f64>>(
    fx: f64,
    fn_: f64,
    gain: f64,
    grad: &G,
    x: &[f64],
    xn: &[f64],
) -> bool {
    if !(gain > 0.0) || (fn_ - fx).abs() > 1e-12 * fx.abs().max(f64::MIN_POSITIVE) {
        return false;
    }
    tangential_dot(&grad(xn), xn, x) >= -0.8 * gain
}

/// Maximizes a concave `f` over the scaled simplex.
///
/// The first step tries a move of length `budget / 10` along the gradient and
/// halves it until the Armijo condition holds. Later steps start from the
/// Barzilai-Borwein length of the previous move, or from twice the last
/// accepted step (never below the first length) when that move shows no
/// curvature.
pub fn projected_gradient_ascent<F, G>(
    f: F,
    grad: G,
    x0: &[f64],
    spec: &AscentSpec,
) -> Result<AscentResult>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    if !(spec.budget > 0.0) {
        return Err(Error::Domain(format!("simplex budget {}", spec.budget)));
    }
    if x0.iter().any(|&v| v < 0.0) || x0.iter().sum::<f64>() > spec.budget * (1.0 + 1e-12) {
        return Err(Error::Domain("infeasible starting point".into()));
    }
    let mut x = project_simplex(x0, spec.budget);
    let mut fx = f(&x);
    let mut trace = vec![fx];
    let mut iterations = 0;
    let mut last_step = 0.0f64;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    loop {
        let g = grad(&x);
        if g.iter().any(|v| !v.is_finite()) || !fx.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite gradient or objective at iteration {iterations}"
            )));
        }
        let pg = projected_gradient(&x, &g, spec.budget);
        if pg < spec.tol {
            return Ok(AscentResult {
                x,
                f: fx,
                iterations,
                trace,
                projected_gradient_norm: pg,
            });
        }
        if iterations >= spec.max_iter {
            return Err(Error::Convergence {
                iterations,
                best_x: f64::NAN,
                best_f: fx,
            });
        }
        iterations += 1;

        let gnorm = norm(&g).max(f64::MIN_POSITIVE);
        let mut step = match prev
            .as_ref()
            .and_then(|(px, pg)| spectral_step(&x, &g, px, pg))
        {
            Some(bb) => bb,
            None => (spec.budget / (10.0 * gnorm)).max(2.0 * last_step),
        };
        prev = Some((x.clone(), g.clone()));
        let mut accepted = false;
        for _ in 0..200 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            let xn = project_simplex(&trial, spec.budget);
            let gain = tangential_dot(&g, &xn, &x);
            let fn_ = f(&xn);
            if fn_ >= fx + 1e-4 * gain || flat_but_uphill(fx, fn_, gain, &grad, &x, &xn) {
                let moved = norm(&xn.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
                x = xn;
                fx = fx.max(fn_);
                accepted = moved > 0.0;
                last_step = step;
                break;
            }
            step *= 0.5;
        }
        trace.push(fx);
        if !accepted {
            // No representable ascent step remains: x is stationary to machine precision.
            let pg = projected_gradient(&x, &grad(&x), spec.budget);
            return Ok(AscentResult {
                x,
                f: fx,
                iterations,
                trace,
                projected_gradient_norm: pg,
            });
        }
    }
}
