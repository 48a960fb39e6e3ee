//! Fisher information of the fusion-center signals from the product series.
//!
//! For fixed `(ĥ, θ)` the density of `b = u1 u2` is tabulated on a polar grid,
//! then convolved with the receiver noise onto a Cartesian `z` grid:
//! `F = Gx diag(w f) Gyᵀ`. The same product with `∂f/∂θ` gives the
//! derivative, and `Σ F'²/F` the information.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::series::{product_gaussian_terms, SeriesOptions};
use super::{clusters_of, crb_from_information, CrbCluster};
use crate::error::{Error, Result};
use crate::model::{ChannelState, DataNoise, Network, PowerAllocation};
use crate::numerics::quadrature::{gauss_hermite, gauss_laguerre, gauss_legendre};

/// Grid sizes for the two-dimensional integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSpec {
    /// Minimum radial nodes on the `b` disc.
    pub radial: usize,
    /// Minimum angular nodes on the `b` disc.
    pub angular: usize,
    /// Upper limit on either polar count after refinement to the noise width.
    pub polar_cap: usize,
    /// Disc radius in units of `max(σ̄ζ, |ĥ|σ̄)`; widened to cover `|u1||u2|`.
    pub radius_scale: f64,
    /// Minimum points per axis of the `z` grid.
    pub z_nodes: usize,
    pub z_cap: usize,
    /// Gauss-Hermite nodes against the prior of `θ`; even so that `θ = 0` is avoided.
    pub theta_nodes: usize,
    /// Gauss-Laguerre nodes over `|ĥ|²` when the estimate is averaged out.
    pub hhat_nodes: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            radial: 40,
            angular: 48,
            polar_cap: 256,
            radius_scale: 8.0,
            z_nodes: 64,
            z_cap: 256,
            theta_nodes: 64,
            hhat_nodes: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrbParams {
    pub series: SeriesOptionsToml,
    pub quad: QuadSpec,
}

/// Serializable mirror of [`SeriesOptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesOptionsToml {
    pub m_max: usize,
    pub m_cap: usize,
    pub tail_tol: f64,
    pub max_cancellation: f64,
}

impl Default for SeriesOptionsToml {
    fn default() -> Self {
        SeriesOptions::default().into()
    }
}

impl From<SeriesOptions> for SeriesOptionsToml {
    fn from(o: SeriesOptions) -> Self {
        Self {
            m_max: o.m_max,
            m_cap: o.m_cap,
            tail_tol: o.tail_tol,
            max_cancellation: o.max_cancellation,
        }
    }
}

impl From<SeriesOptionsToml> for SeriesOptions {
    fn from(o: SeriesOptionsToml) -> Self {
        Self {
            m_max: o.m_max,
            m_cap: o.m_cap.max(o.m_max),
            tail_tol: o.tail_tol,
            max_cancellation: o.max_cancellation,
        }
    }
}

impl CrbParams {
    pub fn with_m_max(mut self, m_max: usize) -> Self {
        self.series.m_max = m_max;
        self
    }
}

/// Weighted samples of the product density and its `θ`-derivative.
#[derive(Debug, Clone)]
pub struct ProductNodes {
    pub b: Vec<Complex64>,
    /// Quadrature weight times density.
    pub wf: Vec<f64>,
    /// Quadrature weight times `∂f/∂θ`; absent at `θ = 0`.
    pub wdf: Option<Vec<f64>>,
    pub radius: f64,
    pub noise_var: f64,
}

impl ProductNodes {
    pub fn new(cl: &CrbCluster, theta: f64, params: &CrbParams) -> Result<Self> {
        if !(cl.zeta_sq > 0.0 && cl.sigma_bar_sq > 0.0 && cl.noise_var > 0.0) {
            return Err(Error::Domain(
                "the conditional density needs positive ζ², σ̄² and receiver noise".into(),
            ));
        }
        let q = &params.quad;
        let opts: SeriesOptions = params.series.into();
        let (sb, zeta) = (cl.sigma_bar_sq.sqrt(), cl.zeta_sq.sqrt());
        let hh = cl.h_hat.norm();
        let mu = cl.mean_u2(theta).abs();
        let radius =
            (q.radius_scale * (sb * zeta).max(hh * sb)).max((hh + 4.0 * zeta) * (mu + 4.0 * sb));
        // Node spacing no coarser than the receiver-noise deviation.
        let s = (0.5 * cl.noise_var).sqrt();
        let nr = q
            .radial
            .max((radius / s).ceil() as usize)
            .min(q.polar_cap.max(q.radial));
        let na = q
            .angular
            .max((2.0 * PI * radius / s).ceil() as usize)
            .min(q.polar_cap.max(q.angular));
        // b = R t², which removes the logarithmic peak at the origin.
        let (t, wt) = gauss_legendre(nr, 0.0, 1.0);
        let mu_y = Complex64::new(cl.mean_u2(theta), 0.0);
        let mut b = Vec::with_capacity(nr * na);
        let mut wf = Vec::with_capacity(nr * na);
        let mut wdf = Vec::with_capacity(nr * na);
        let mut shaky = Vec::new();
        let dphi = 2.0 * PI / na as f64;
        for (ti, wi) in t.iter().zip(&wt) {
            let rho = radius * ti * ti;
            let area = 2.0 * radius * radius * ti.powi(3) * wi * dphi;
            for k in 0..na {
                let bz = Complex64::from_polar(rho, (k as f64 + 0.5) * dphi);
                let terms =
                    product_gaussian_terms(bz, cl.h_hat, cl.zeta_sq, mu_y, cl.sigma_bar_sq, &opts)
                        .map_err(|e| {
                            Error::Numerical(format!(
                                "product density at b = {bz:.4}, θ = {theta}: {e}"
                            ))
                        })?;
                let v = terms.value;
                if v.f <= 0.0 || terms.magnitude > opts.max_cancellation * v.f {
                    shaky.push((b.len(), terms.magnitude * area));
                }
                b.push(bz);
                wf.push(area * v.f);
                wdf.push(if theta != 0.0 {
                    area * v.ky_log_derivative / theta
                } else {
                    0.0
                });
            }
        }
        // Cancelled points are dropped when their rounding error bound is
        // negligible against the total mass.
        let mass: f64 = wf.iter().sum();
        for (i, bound) in shaky {
            if bound * 1e-15 > 1e-10 * mass {
                return Err(Error::Numerical(format!(
                    "series cancellation at b = {:.4}, θ = {theta} with non-negligible mass",
                    b[i]
                )));
            }
            wf[i] = 0.0;
            wdf[i] = 0.0;
        }
        Ok(Self {
            b,
            wf,
            wdf: (theta != 0.0).then_some(wdf),
            radius,
            noise_var: cl.noise_var,
        })
    }

    fn kernel(&self, d: Complex64) -> f64 {
        (-d.norm_sqr() / self.noise_var).exp() / (PI * self.noise_var)
    }

    /// `f(z | ĥ, θ)`.
    pub fn pdf(&self, z: Complex64) -> f64 {
        self.b
            .iter()
            .zip(&self.wf)
            .map(|(&b, &w)| w * self.kernel(z - b))
            .sum()
    }

    /// `∂f(z | ĥ, θ)/∂θ`; a domain error at `θ = 0`.
    pub fn pdf_dtheta(&self, z: Complex64) -> Result<f64> {
        let wdf = self.wdf.as_ref().ok_or_else(|| {
            Error::Domain("the θ-derivative of the series is singular at θ = 0".into())
        })?;
        Ok(self
            .b
            .iter()
            .zip(wdf)
            .map(|(&b, &w)| w * self.kernel(z - b))
            .sum())
    }

    /// Tabulates the density and derivative on a square `z` grid.
    pub fn grid(&self, params: &CrbParams) -> Result<ConditionalGrid> {
        let wdf = self.wdf.as_ref().ok_or_else(|| {
            Error::Domain("the θ-derivative of the series is singular at θ = 0".into())
        })?;
        let s = (0.5 * self.noise_var).sqrt();
        let half = self.radius + 7.0 * s;
        let n = params
            .quad
            .z_nodes
            .max((2.0 * half / s).ceil() as usize + 1)
            .min(params.quad.z_cap.max(params.quad.z_nodes));
        let step = 2.0 * half / (n - 1) as f64;
        let axis: Vec<f64> = (0..n).map(|i| -half + i as f64 * step).collect();
        let nb = self.b.len();
        let norm = 1.0 / (PI * self.noise_var).sqrt();
        let gx = DMatrix::from_fn(n, nb, |i, k| {
            norm * (-(axis[i] - self.b[k].re).powi(2) / self.noise_var).exp()
        });
        let gy = DMatrix::from_fn(n, nb, |j, k| {
            norm * (-(axis[j] - self.b[k].im).powi(2) / self.noise_var).exp()
        });
        let mut a = gx.clone();
        let mut ad = gx;
        for k in 0..nb {
            a.column_mut(k).scale_mut(self.wf[k]);
            ad.column_mut(k).scale_mut(wdf[k]);
        }
        let gyt = gy.transpose();
        Ok(ConditionalGrid {
            axis,
            step,
            f: a * &gyt,
            df: ad * &gyt,
        })
    }
}

/// Conditional density and its `θ`-derivative on a Cartesian grid; rows index
/// the real part of `z`, columns the imaginary part.
#[derive(Debug, Clone)]
pub struct ConditionalGrid {
    pub axis: Vec<f64>,
    pub step: f64,
    pub f: DMatrix<f64>,
    pub df: DMatrix<f64>,
}

impl ConditionalGrid {
    /// `∫ f dz`.
    pub fn normalization(&self) -> f64 {
        self.f.sum() * self.step * self.step
    }

    /// `∫ ∂f/∂θ dz`, zero for a valid density.
    pub fn score_mean(&self) -> f64 {
        self.df.sum() * self.step * self.step
    }

    /// `∫ (∂f/∂θ)² / f dz`.
    pub fn information(&self) -> f64 {
        let floor = 1e-300;
        self.f
            .iter()
            .zip(self.df.iter())
            .filter(|(f, _)| **f > floor)
            .map(|(f, d)| d * d / f)
            .sum::<f64>()
            * self.step
            * self.step
    }
}

/// Positive Hermite nodes with doubled weights, as `(θ, weight)` against
/// `N(0, σθ²)`. The information is even in `θ`: flipping the sign of `θ`
/// flips `u2`, which maps `z` to `-z`. Far-tail nodes with weight below
/// `1e-14` are skipped; the information grows only polynomially in `θ`.
fn theta_rule(sigma_theta_sq: f64, nodes: usize) -> Result<Vec<(f64, f64)>> {
    if nodes == 0 || nodes % 2 == 1 {
        return Err(Error::Domain(format!(
            "θ rule needs an even, positive node count, got {nodes}"
        )));
    }
    let (t, w) = gauss_hermite(nodes);
    let sd = (2.0 * sigma_theta_sq).sqrt();
    Ok(t.iter()
        .zip(&w)
        .map(|(t, w)| (sd * t, 2.0 * w / PI.sqrt()))
        .filter(|&(t, w)| t > 0.0 && w > 1e-14)
        .collect())
}

/// `E_θ G₂(θ)` for one cluster at its current channel estimate.
pub fn cluster_information(
    cl: &CrbCluster,
    sigma_theta_sq: f64,
    params: &CrbParams,
) -> Result<f64> {
    if cl.is_silent() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for (theta, w) in theta_rule(sigma_theta_sq, params.quad.theta_nodes)? {
        let g = ProductNodes::new(cl, theta, params)?.grid(params)?;
        acc += w * g.information();
    }
    Ok(acc)
}

/// `E_θ G₂(θ)` summed over the clusters, conditioned on the channel estimates.
pub fn fisher_g2(
    network: &Network,
    alloc: &PowerAllocation,
    channel: &ChannelState,
    noise: DataNoise,
    params: &CrbParams,
) -> Result<f64> {
    clusters_of(network, alloc, channel, noise)?
        .iter()
        .map(|cl| cluster_information(cl, network.sigma_theta_sq(), params))
        .sum()
}

/// `G⁻¹` for the allocation at the channel estimates in `channel`.
pub fn bayesian_crb(
    network: &Network,
    alloc: &PowerAllocation,
    channel: &ChannelState,
    noise: DataNoise,
    params: &CrbParams,
) -> Result<f64> {
    Ok(crb_from_information(
        network.sigma_theta_sq(),
        fisher_g2(network, alloc, channel, noise, params)?,
    ))
}

/// `G⁻¹` with the information additionally averaged over the channel
/// estimate: `|ĥ|²` is exponential with mean `2σh² - ζ²` and its phase does
/// not matter. The allocation is held fixed.
pub fn averaged_crb(
    network: &Network,
    alloc: &PowerAllocation,
    zeta_sq: &[f64],
    noise: DataNoise,
    params: &CrbParams,
) -> Result<f64> {
    let (x, w) = gauss_laguerre(params.quad.hhat_nodes);
    let mut g2 = 0.0;
    for (l, c) in network.config.clusters.iter().enumerate() {
        let mean = 2.0 * c.sigma_h_sq - zeta_sq[l];
        if !(mean > 0.0) {
            return Err(Error::Domain(format!(
                "cluster {l}: ζ² exceeds the channel variance"
            )));
        }
        for (xi, wi) in x.iter().zip(&w) {
            let mut channel =
                ChannelState::perfect(&vec![Complex64::new(0.0, 0.0); network.num_clusters()]);
            channel.h_hat[l] = Complex64::new((mean * xi).sqrt(), 0.0);
            channel.zeta_sq = zeta_sq.to_vec();
            let cl = CrbCluster::from_allocation(network, alloc, &channel, l, noise)?;
            g2 += wi * cluster_information(&cl, network.sigma_theta_sq(), params)?;
        }
    }
    Ok(crb_from_information(network.sigma_theta_sq(), g2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crb::mixture::{mixture_pdf, MixtureRule, U2Model};

    fn cluster() -> CrbCluster {
        CrbCluster {
            h_hat: Complex64::new(0.8, 0.5),
            zeta_sq: 0.4,
            a3: 0.9,
            sigma_bar_sq: 0.3,
            noise_var: 0.5,
        }
    }

    #[test]
    fn pointwise_density_matches_mixture() {
        let cl = cluster();
        let params = CrbParams::default();
        let rule = MixtureRule::new(48);
        for theta in [-1.1, 0.4, 1.7] {
            let nodes = ProductNodes::new(&cl, theta, &params).unwrap();
            for z in [
                Complex64::new(0.3, 0.2),
                Complex64::new(-1.0, 0.8),
                Complex64::new(2.0, -0.5),
            ] {
                let a = nodes.pdf(z);
                let b = mixture_pdf(z, &cl, theta, U2Model::Complex, &rule);
                assert!(
                    ((a - b) / b).abs() < 1e-4,
                    "θ = {theta}, z = {z}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let cl = cluster();
        let params = CrbParams::default();
        let h = 1e-4;
        for theta in [-0.8, 0.5, 1.3] {
            let d = ProductNodes::new(&cl, theta, &params).unwrap();
            let p = ProductNodes::new(&cl, theta + h, &params).unwrap();
            let m = ProductNodes::new(&cl, theta - h, &params).unwrap();
            for z in [Complex64::new(0.3, 0.2), Complex64::new(-1.0, 0.8)] {
                let fd = (p.pdf(z) - m.pdf(z)) / (2.0 * h);
                let an = d.pdf_dtheta(z).unwrap();
                assert!(
                    (an - fd).abs() < 1e-3 * fd.abs().max(d.pdf(z)),
                    "θ = {theta}: {an} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn grid_is_normalized_with_zero_mean_score() {
        let params = CrbParams::default();
        let g = ProductNodes::new(&cluster(), 0.9, &params)
            .unwrap()
            .grid(&params)
            .unwrap();
        assert!(
            (g.normalization() - 1.0).abs() < 1e-3,
            "{}",
            g.normalization()
        );
        assert!(g.score_mean().abs() < 1e-4, "{}", g.score_mean());
        assert!(g.information() > 0.0);
    }

    #[test]
    fn derivative_at_zero_is_a_domain_error() {
        let nodes = ProductNodes::new(&cluster(), 0.0, &CrbParams::default()).unwrap();
        assert!(matches!(
            nodes.pdf_dtheta(Complex64::new(0.1, 0.1)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn information_is_even_in_theta() {
        let params = CrbParams::default();
        let a = ProductNodes::new(&cluster(), 0.7, &params)
            .unwrap()
            .grid(&params)
            .unwrap();
        let b = ProductNodes::new(&cluster(), -0.7, &params)
            .unwrap()
            .grid(&params)
            .unwrap();
        assert!(((a.information() - b.information()) / a.information()).abs() < 1e-6);
    }

    #[test]
    fn truncation_order_is_stable() {
        let cl = cluster();
        let z = Complex64::new(0.6, -0.4);
        let lo = ProductNodes::new(&cl, 0.8, &CrbParams::default().with_m_max(20))
            .unwrap()
            .pdf(z);
        let hi = ProductNodes::new(&cl, 0.8, &CrbParams::default().with_m_max(30))
            .unwrap()
            .pdf(z);
        assert!(((lo - hi) / hi).abs() < 1e-4);
    }

    #[test]
    fn silent_cluster_adds_nothing() {
        let cl = CrbCluster {
            a3: 0.0,
            ..cluster()
        };
        assert_eq!(
            cluster_information(&cl, 1.0, &CrbParams::default()).unwrap(),
            0.0
        );
    }
}
