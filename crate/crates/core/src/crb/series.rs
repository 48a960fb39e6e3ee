//! Density of the product `Z = X Y` of two independent proper complex
//! Gaussians `X ~ CN(μx, σx²)`, `Y ~ CN(μy, σy²)`, as a triple series in
//! Bessel functions.
//!
//! With `kx = |μx|/σx`, `ky = |μy|/σy`, `s = σx σy`, `r = |Z|`, `x = 2r/s` and
//! `φ' = ∠Z - ∠μx - ∠μy`:
//!
//! `f(Z) = 2/(π s²) e^{-kx² - ky²} Σ_{n,p,j} A^n B^p C^j K_{n-p}(x) / (n! p! j! (n+p+j)!)`
//!
//! where `A = r kx²/s`, `B = r ky²/s` and `C = 2 r kx ky cos(φ')/s`, summed over
//! `n + p + j <= M`. Each term is homogeneous of degree `2p + j` in `ky`.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Starting truncation order.
    pub m_max: usize,
    /// Hard cap on the truncation order.
    pub m_cap: usize,
    /// Stop extending once the last shell is below this fraction of the sum.
    pub tail_tol: f64,
    /// Largest tolerated ratio of `Σ|terms|` to `|Σ terms|`.
    pub max_cancellation: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            m_max: 25,
            m_cap: 400,
            tail_tol: 1e-8,
            max_cancellation: 1e8,
        }
    }
}

/// Density value and `∂f/∂ky · ky`, the derivative with respect to `log ky`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub f: f64,
    pub ky_log_derivative: f64,
    pub order: usize,
}

struct Sums {
    value: f64,
    weighted: f64,
    abs: f64,
    shell: f64,
}

/// `K_ν(x) (x/2)^ν / ν!` scaled by `e^x`, for `ν = 0..=n_max`. Bounded in `ν`
/// where `K_ν` itself overflows.
fn reduced_k(n_max: usize, x: f64) -> Vec<f64> {
    let (k0, k1) = super::bessel::k0_k1_scaled(x);
    let h = 0.5 * x;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(k0);
    if n_max >= 1 {
        out.push(k1 * h);
    }
    for n in 1..n_max {
        let nf = n as f64;
        out.push(out[n - 1] * h * h / (nf * (nf + 1.0)) + out[n] * nf / (nf + 1.0));
    }
    out
}

/// Sums the truncated series in reduced variables: `a = kx²`, `b = ky²`,
/// `c = 2 kx ky cos φ'` and `h = x/2`, so that
/// `A^n B^p C^j K_{n-p} = a^n b^p c^j h^{2 min(n,p) + j} |n-p|! K̃_{|n-p|}`.
fn sums(a: f64, b: f64, c: f64, h: f64, m: usize) -> Sums {
    let kt = reduced_k(m, 2.0 * h);
    let mut ln_fact = vec![0.0; 2 * m + 2];
    for i in 1..ln_fact.len() {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let ln_pow = |base: f64, e: usize| if e == 0 { 0.0 } else { e as f64 * base.ln() };
    let ch = c * h;
    let mut out = Sums {
        value: 0.0,
        weighted: 0.0,
        abs: 0.0,
        shell: 0.0,
    };
    for n in 0..=m {
        if n > 0 && a == 0.0 {
            break;
        }
        for p in 0..=(m - n) {
            if p > 0 && b == 0.0 {
                break;
            }
            let nu = n.abs_diff(p);
            let lo = n.min(p);
            let ln_base = ln_pow(a, n) - ln_fact[n] + ln_pow(b, p) - ln_fact[p]
                + ln_pow(h, 2 * lo)
                + ln_fact[nu]
                - ln_fact[n + p];
            let mut t = ln_base.exp() * kt[nu];
            if t == 0.0 {
                continue;
            }
            let jmax = m - n - p;
            for j in 0..=jmax {
                if j > 0 {
                    t *= ch / (j as f64 * (n + p + j) as f64);
                    if t == 0.0 {
                        break;
                    }
                }
                out.value += t;
                out.weighted += (2 * p + j) as f64 * t;
                out.abs += t.abs();
                if j == jmax {
                    out.shell += t.abs();
                }
            }
        }
    }
    out
}

/// Series value together with `Σ|terms|` on the same scale, which bounds the
/// rounding error of the sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTerms {
    pub value: SeriesValue,
    pub magnitude: f64,
}

/// Sums the series without judging cancellation. Fails on overflow or when
/// the tail has not settled by `m_cap`.
pub fn product_gaussian_terms(
    z: Complex64,
    mu_x: Complex64,
    var_x: f64,
    mu_y: Complex64,
    var_y: f64,
    opts: &SeriesOptions,
) -> Result<SeriesTerms> {
    if !(var_x > 0.0 && var_y > 0.0) {
        return Err(Error::Domain("variances must be positive".into()));
    }
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::Domain(
            "the product density is singular at the origin".into(),
        ));
    }
    let s = (var_x * var_y).sqrt();
    let kx2 = mu_x.norm_sqr() / var_x;
    let ky2 = mu_y.norm_sqr() / var_y;
    let phase = z.arg() - mu_x.arg() - mu_y.arg();
    let c = 2.0 * (kx2 * ky2).sqrt() * phase.cos();
    let x = 2.0 * r / s;
    let scale = ((2.0 / (std::f64::consts::PI * s * s)).ln() - kx2 - ky2 - x).exp();

    let mut m = opts.m_max;
    loop {
        let t = sums(kx2, ky2, c, 0.5 * x, m);
        if !t.value.is_finite() || !t.abs.is_finite() {
            return Err(Error::Numerical(format!(
                "series overflow at order {m} (|Z| = {r})"
            )));
        }
        // A tail below the rounding noise of the sum cannot change it.
        let settled = t.shell <= opts.tail_tol * t.value.abs() || t.shell <= f64::EPSILON * t.abs;
        if settled || m >= opts.m_cap {
            if !settled {
                return Err(Error::Numerical(format!(
                    "series tail still {:.3e} at order {m} (|Z| = {r})",
                    t.shell / t.value.abs()
                )));
            }
            // Weighted sum has degree 2p + j in ky; the prefactor contributes -2ky².
            return Ok(SeriesTerms {
                value: SeriesValue {
                    f: scale * t.value,
                    ky_log_derivative: scale * (t.weighted - 2.0 * ky2 * t.value),
                    order: m,
                },
                magnitude: scale * t.abs,
            });
        }
        m = (m + 10).min(opts.m_cap);
    }
}

/// Evaluates the product density at `z` and its log-`ky` derivative.
pub fn product_gaussian_pdf(
    z: Complex64,
    mu_x: Complex64,
    var_x: f64,
    mu_y: Complex64,
    var_y: f64,
    opts: &SeriesOptions,
) -> Result<SeriesValue> {
    let t = product_gaussian_terms(z, mu_x, var_x, mu_y, var_y, opts)?;
    if t.value.f <= 0.0 || t.magnitude > opts.max_cancellation * t.value.f {
        return Err(Error::Numerical(format!(
            "series cancellation {:.3e} at order {} (|Z| = {})",
            t.magnitude / t.value.f.abs(),
            t.value.order,
            z.norm()
        )));
    }
    Ok(t.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bessel_i0(q: f64) -> f64 {
        let y = 0.25 * q * q;
        let (mut t, mut acc) = (1.0, 1.0);
        for k in 1..500 {
            t *= y / (k * k) as f64;
            acc += t;
            if t < 1e-17 * acc {
                break;
            }
        }
        acc
    }

    /// Conditions on `X = ρ e^{iφ}`: the angular integral is `2π I0(√Q)`, and
    /// the radial one is a trapezoid rule in `log ρ`.
    fn oracle(z: Complex64, mu_x: Complex64, var_x: f64, mu_y: Complex64, var_y: f64) -> f64 {
        let r = z.norm();
        let cosp = (z.arg() - mu_x.arg() - mu_y.arg()).cos();
        let (mx, my) = (mu_x.norm(), mu_y.norm());
        let step = 2e-3;
        let mut acc = 0.0;
        for i in -20_000..=20_000 {
            let rho = (i as f64 * step).exp();
            let a1 = 2.0 * rho * mx / var_x;
            let b1 = 2.0 * r * my / (rho * var_y);
            let q = (a1 * a1 + b1 * b1 + 2.0 * a1 * b1 * cosp).max(0.0).sqrt();
            let e = -rho * rho / var_x - r * r / (rho * rho * var_y);
            if e < -700.0 {
                continue;
            }
            acc += e.exp() * bessel_i0(q);
        }
        let pref = 2.0 / (std::f64::consts::PI * var_x * var_y);
        pref * (-mu_x.norm_sqr() / var_x - mu_y.norm_sqr() / var_y).exp() * acc * step
    }

    #[test]
    fn agrees_with_radial_quadrature() {
        let opts = SeriesOptions::default();
        let cases = [
            (
                Complex64::new(0.7, 0.4),
                Complex64::new(1.0, 0.3),
                0.5,
                Complex64::new(0.8, 0.0),
                1.5,
            ),
            (
                Complex64::new(-1.2, 0.1),
                Complex64::new(0.4, -0.2),
                0.8,
                Complex64::new(-0.3, 0.0),
                0.6,
            ),
            (
                Complex64::new(2.0, -1.0),
                Complex64::new(1.5, 0.0),
                0.3,
                Complex64::new(1.0, 0.5),
                0.4,
            ),
        ];
        for (z, mx, vx, my, vy) in cases {
            let s = product_gaussian_pdf(z, mx, vx, my, vy, &opts).unwrap();
            let o = oracle(z, mx, vx, my, vy);
            assert!(((s.f - o) / o).abs() < 1e-9, "series {} oracle {}", s.f, o);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let opts = SeriesOptions::default();
        let z = Complex64::new(0.6, -0.5);
        let (mx, vx, vy) = (Complex64::new(0.9, 0.2), 0.7, 0.9);
        let my = |t: f64| Complex64::new(0.8 * t, 0.0);
        let t = 1.1;
        let v = product_gaussian_pdf(z, mx, vx, my(t), vy, &opts).unwrap();
        let h = 1e-5;
        let fp = product_gaussian_pdf(z, mx, vx, my(t + h), vy, &opts)
            .unwrap()
            .f;
        let fm = product_gaussian_pdf(z, mx, vx, my(t - h), vy, &opts)
            .unwrap()
            .f;
        let fd = (fp - fm) / (2.0 * h);
        // ky ∝ t, so t ∂f/∂t is the log-ky derivative.
        assert!((v.ky_log_derivative / t - fd).abs() < 1e-7 * fd.abs().max(v.f));
    }

    #[test]
    fn zero_means_reduce_to_k0() {
        let z = Complex64::new(0.3, 0.4);
        let v = product_gaussian_pdf(
            z,
            Complex64::new(0.0, 0.0),
            1.0,
            Complex64::new(0.0, 0.0),
            2.0,
            &SeriesOptions::default(),
        )
        .unwrap();
        let s = 2f64.sqrt();
        let (k0, _) = super::super::bessel::k0_k1(2.0 * 0.5 / s);
        assert!((v.f - 2.0 / (std::f64::consts::PI * 2.0) * k0).abs() < 1e-14);
    }

    #[test]
    fn origin_is_a_domain_error() {
        let r = product_gaussian_pdf(
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            1.0,
            Complex64::new(1.0, 0.0),
            1.0,
            &SeriesOptions::default(),
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
