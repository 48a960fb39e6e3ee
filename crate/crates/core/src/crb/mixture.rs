//! Conditional density of `z` as a Gaussian mixture, and the Monte Carlo
//! Fisher information built on it.
//!
//! Given one of the two factors, `z` is complex Gaussian, so the density is a
//! Gauss-Hermite average over that factor. The score is a central difference
//! of `ln f` in `θ`.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use super::{clusters_of, crb_from_information, CrbCluster};
use crate::error::{Error, Result};
use crate::model::{cn_sample, ChannelState, DataNoise, Network, PowerAllocation};
use crate::numerics::quadrature::gauss_hermite;

/// Distribution of the fused head signal `u2` given `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum U2Model {
    /// `CN(a3 θ, σ̄²)`, the form the series evaluator assumes.
    #[default]
    Complex,
    /// `N(a3 θ, σ̄²)`, what the sensors actually produce.
    Real,
}

fn cn_density(z: Complex64, mean: Complex64, var: f64) -> f64 {
    (-(z - mean).norm_sqr() / var).exp() / (PI * var)
}

/// Hermite rule prepared for repeated mixture evaluations.
#[derive(Debug, Clone)]
pub struct MixtureRule {
    t: Vec<f64>,
    w: Vec<f64>,
}

impl MixtureRule {
    pub fn new(nodes: usize) -> Self {
        let (t, w) = gauss_hermite(nodes);
        let w = w.into_iter().map(|x| x / PI.sqrt()).collect();
        Self { t, w }
    }
}

impl Default for MixtureRule {
    fn default() -> Self {
        Self::new(32)
    }
}

/// `f(z | ĥ, θ)` by quadrature over one factor.
///
/// For the complex model the factor with the larger mean-to-deviation ratio
/// is integrated out.
pub fn mixture_pdf(
    z: Complex64,
    cl: &CrbCluster,
    theta: f64,
    model: U2Model,
    rule: &MixtureRule,
) -> f64 {
    mixture_moments(z, cl, theta, model, rule).0
}

/// `f(z | ĥ, θ)` together with `f · E[s_u² | z, θ]`, where `s_u` is the score
/// of `u2` alone. The second entry has mean [`head_information`] over `z`.
fn mixture_moments(
    z: Complex64,
    cl: &CrbCluster,
    theta: f64,
    model: U2Model,
    rule: &MixtureRule,
) -> (f64, f64) {
    let mu2 = cl.mean_u2(theta);
    match model {
        U2Model::Real => real_mixture(z, cl, mu2, rule),
        U2Model::Complex => {
            let kx2 = cl.h_hat.norm_sqr() / cl.zeta_sq;
            let ky2 = mu2 * mu2 / cl.sigma_bar_sq;
            complex_mixture(z, cl, mu2, kx2 >= ky2, rule)
        }
    }
}

/// Information about `θ` in `u2` itself: `a2` for the real model and `2 a2`
/// for the complex one. Caps the information in `z`.
pub fn head_information(cl: &CrbCluster, model: U2Model) -> f64 {
    match model {
        U2Model::Real => cl.a2(),
        U2Model::Complex => 2.0 * cl.a2(),
    }
}

/// Weights of the prior-centred and posterior-centred rules. `kappa_sq` is
/// the prior precision over the approximate posterior precision. An
/// uninformative likelihood leaves the prior rule alone; a sharp one leaves
/// the prior rule only the tail.
fn rule_weights(kappa_sq: f64) -> (f64, f64) {
    let prior = (2.25 * kappa_sq).powi(4).min(1.0);
    let post = (4.0 * (1.0 / kappa_sq - 1.0)).clamp(0.0, 1.0);
    (prior, post)
}

/// Real `u2`. A rule centred on a Gaussian approximation of `u2` given `z`
/// carries the peak that forms once `|ĥ|σ̄` dwarfs the receiver noise, while
/// the prior rule picks up the likelihood tail. Both integrate
/// `φ_prior L / (β₁ φ_prior + β₂ φ_post)`, scaled by their own `β`.
fn real_mixture(z: Complex64, cl: &CrbCluster, mu2: f64, rule: &MixtureRule) -> (f64, f64) {
    let v = cl.sigma_bar_sq;
    let h2 = cl.h_hat.norm_sqr();
    let lik = |u: f64| cn_density(z, cl.h_hat * u, cl.zeta_sq * u * u + cl.noise_var);
    // In u the likelihood is close to N(Re(z/ĥ), (ζ²u² + σ²)/(2|ĥ|²)).
    let pull = 2.0 * (cl.h_hat.conj() * z).re;
    let (mut m, mut prec) = (mu2, 1.0 / v);
    for _ in 0..3 {
        let lv = cl.zeta_sq * m * m + cl.noise_var;
        prec = 1.0 / v + 2.0 * h2 / lv;
        m = (mu2 / v + pull / lv) / prec;
    }
    let (prior_sd, post_sd) = (v.sqrt(), 1.5 / prec.sqrt());
    let (b1, b2) = rule_weights(1.0 / (v * prec));
    let log_ratio = |u: f64| {
        let a = (u - m) / post_sd;
        let b = (u - mu2) / prior_sd;
        0.5 * (b * b - a * a) + (prior_sd / post_sd).ln()
    };
    let (mut acc, mut acc_s2) = (0.0, 0.0);
    for (centre, sd, scale) in [(mu2, prior_sd, b1), (m, post_sd, b2)] {
        if scale == 0.0 {
            continue;
        }
        for (&t, &w) in rule.t.iter().zip(&rule.w) {
            let u = centre + SQRT_2 * sd * t;
            let f = scale * w * lik(u) / (b1 + b2 * log_ratio(u).exp());
            let s = cl.a3 * (u - mu2) / v;
            acc += f;
            acc_s2 += f * s * s;
        }
    }
    (acc, acc_s2)
}

/// Complex `u2`: the same two-rule scheme over `u1` (`on_u1`) or `u2`.
fn complex_mixture(
    z: Complex64,
    cl: &CrbCluster,
    mu2: f64,
    on_u1: bool,
    rule: &MixtureRule,
) -> (f64, f64) {
    let (t, w) = (&rule.t, &rule.w);
    let (mean, var, other_mean, other_var) = if on_u1 {
        (
            cl.h_hat,
            cl.zeta_sq,
            Complex64::new(mu2, 0.0),
            cl.sigma_bar_sq,
        )
    } else {
        (
            Complex64::new(mu2, 0.0),
            cl.sigma_bar_sq,
            cl.h_hat,
            cl.zeta_sq,
        )
    };
    let lik = |u: Complex64| cn_density(z, u * other_mean, u.norm_sqr() * other_var + cl.noise_var);
    // In u the likelihood is close to CN(z / m_o, (|u|² σ_o² + σ²) / |m_o|²).
    let (g2, pull) = (other_mean.norm_sqr(), z * other_mean.conj());
    let (mut m, mut prec) = (mean, 1.0 / var);
    for _ in 0..3 {
        let lv = m.norm_sqr() * other_var + cl.noise_var;
        prec = 1.0 / var + g2 / lv;
        m = (mean / var + pull / lv) / prec;
    }
    let post_var = 2.25 / prec;
    let (b1, b2) = rule_weights(1.0 / (var * prec));
    let log_ratio = |u: Complex64| {
        (u - mean).norm_sqr() / var - (u - m).norm_sqr() / post_var + (var / post_var).ln()
    };
    // E[s_u² | z, node]: direct on a u2 node, Gaussian posterior of u2 on a
    // u1 node.
    let gain = 2.0 * cl.a3 / cl.sigma_bar_sq;
    let s2 = |u: Complex64| {
        if on_u1 {
            let p = 1.0 / cl.sigma_bar_sq + u.norm_sqr() / cl.noise_var;
            let pm = (mu2 / cl.sigma_bar_sq + u.conj() * z / cl.noise_var) / p;
            gain * gain * ((pm.re - mu2).powi(2) + 0.5 / p)
        } else {
            (gain * (u.re - mu2)).powi(2)
        }
    };
    let (mut acc, mut acc_s2) = (0.0, 0.0);
    for (centre, v, scale) in [(mean, var, b1), (m, post_var, b2)] {
        if scale == 0.0 {
            continue;
        }
        // Real and imaginary parts each carry v/2, so the node scale is √v.
        let sd = v.sqrt();
        for (&ti, &wi) in t.iter().zip(w) {
            for (&tj, &wj) in t.iter().zip(w) {
                let u = centre + Complex64::new(sd * ti, sd * tj);
                let f = scale * wi * wj * lik(u) / (b1 + b2 * log_ratio(u).exp());
                acc += f;
                acc_s2 += f * s2(u);
            }
        }
    }
    (acc, acc_s2)
}

/// Draws `z` for one cluster given `θ`.
pub fn sample_z<R: Rng + ?Sized>(
    cl: &CrbCluster,
    theta: f64,
    model: U2Model,
    rng: &mut R,
) -> Complex64 {
    let u1 = cl.h_hat + cn_sample(rng, cl.zeta_sq);
    let mu2 = cl.mean_u2(theta);
    let u2 = match model {
        U2Model::Complex => Complex64::new(mu2, 0.0) + cn_sample(rng, cl.sigma_bar_sq),
        U2Model::Real => Complex64::new(
            mu2 + cl.sigma_bar_sq.sqrt() * rng.sample::<f64, _>(StandardNormal),
            0.0,
        ),
    };
    u1 * u2 + cn_sample(rng, cl.noise_var)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl McEstimate {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_err: (var / n).sqrt(),
            samples: values.len(),
        }
    }
}

/// `E_θ E_z (∂ ln f / ∂θ)²` for one cluster with `θ ~ N(0, σθ²)`.
///
/// The score is a central difference of `ln f`. `E[s_u² | z, θ]`, whose mean
/// is [`head_information`], serves as a control variate with a fitted
/// coefficient; it removes most of the sampling noise once the link is good.
pub fn monte_carlo_information<R: Rng + ?Sized>(
    cl: &CrbCluster,
    sigma_theta_sq: f64,
    model: U2Model,
    samples: usize,
    rule: &MixtureRule,
    rng: &mut R,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    if cl.is_silent() {
        return Ok(McEstimate {
            mean: 0.0,
            std_err: 0.0,
            samples,
        });
    }
    if !(cl.zeta_sq > 0.0 && cl.sigma_bar_sq > 0.0 && cl.noise_var > 0.0) {
        return Err(Error::Domain(
            "the mixture needs positive ζ², σ̄² and receiver noise".into(),
        ));
    }
    let sd = sigma_theta_sq.sqrt();
    let mut y = Vec::with_capacity(samples);
    let mut x = Vec::with_capacity(samples);
    for _ in 0..samples {
        let theta = sd * rng.sample::<f64, _>(StandardNormal);
        let z = sample_z(cl, theta, model, rng);
        let h = 1e-5 * sd.max(theta.abs());
        let (fp, sp) = mixture_moments(z, cl, theta + h, model, rule);
        let (fm, sm) = mixture_moments(z, cl, theta - h, model, rule);
        if !(fp > 0.0 && fm > 0.0) {
            return Err(Error::Numerical(format!(
                "mixture density underflow at z = {z}, θ = {theta}"
            )));
        }
        let score = (fp.ln() - fm.ln()) / (2.0 * h);
        y.push(score * score);
        x.push(0.5 * (sp / fp + sm / fm));
    }
    let cap = head_information(cl, model);
    let beta = control_coefficient(&y, &x);
    let adjusted: Vec<f64> = y
        .iter()
        .zip(&x)
        .map(|(yi, xi)| yi - beta * (xi - cap))
        .collect();
    Ok(McEstimate::from_values(&adjusted))
}

/// Least-squares slope of `y` on `x`; zero when `x` does not vary.
fn control_coefficient(y: &[f64], x: &[f64]) -> f64 {
    let n = y.len() as f64;
    let (my, mx) = (y.iter().sum::<f64>() / n, x.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (yi, xi) in y.iter().zip(x) {
        sxy += (yi - my) * (xi - mx);
        sxx += (xi - mx) * (xi - mx);
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Bound `G⁻¹` with `E G₂` estimated by simulation, conditioned on the
/// channel estimates in `channel`. Returns the bound and the summed estimate.
pub fn monte_carlo_crb<R: Rng + ?Sized>(
    network: &Network,
    alloc: &PowerAllocation,
    channel: &ChannelState,
    noise: DataNoise,
    model: U2Model,
    samples: usize,
    rule: &MixtureRule,
    rng: &mut R,
) -> Result<(f64, McEstimate)> {
    let mut total = McEstimate {
        mean: 0.0,
        std_err: 0.0,
        samples,
    };
    let mut var = 0.0;
    for cl in clusters_of(network, alloc, channel, noise)? {
        let e = monte_carlo_information(&cl, network.sigma_theta_sq(), model, samples, rule, rng)?;
        total.mean += e.mean;
        var += e.std_err * e.std_err;
    }
    total.std_err = var.sqrt();
    Ok((
        crb_from_information(network.sigma_theta_sq(), total.mean),
        total,
    ))
}
