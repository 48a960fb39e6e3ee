//! Linear MMSE fusion of the cluster-head signals and the closed-form MSE
//! expressions for imperfect, perfect and error-free links.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ChannelState, ClusterView, Network, PowerAllocation};

/// Effective gain `g = sqrt(P) h_hat wᵀrho` and noise `c = σv² + wᵀΛ1w` of one cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterLink {
    pub gain: Complex64,
    pub noise: f64,
}

impl ClusterLink {
    /// Contribution `|g|² / c` to the posterior precision.
    pub fn snr(&self) -> f64 {
        self.gain.norm_sqr() / self.noise
    }
}

/// `wᵀΛ1w` with `Λ1 = σθ²ζ²PΠ + (|h_hat|² + ζ²)(Σq + PΔ)`.
pub fn lambda1_quad(
    view: &ClusterView,
    p: f64,
    w: &DVector<f64>,
    h_hat_sq: f64,
    zeta_sq: f64,
) -> f64 {
    let wr = w.dot(&view.derived.rho);
    let sp = view.quad_sigma_q(w) + p * view.quad(&view.derived.delta, w);
    view.sigma_theta_sq * zeta_sq * p * wr * wr + (h_hat_sq + zeta_sq) * sp
}

pub fn cluster_link(
    view: &ClusterView,
    p: f64,
    w: &DVector<f64>,
    h_hat: Complex64,
    zeta_sq: f64,
) -> ClusterLink {
    let gain = h_hat * (p.sqrt() * w.dot(&view.derived.rho));
    let noise = view.spec.sigma_v_sq + lambda1_quad(view, p, w, h_hat.norm_sqr(), zeta_sq);
    ClusterLink { gain, noise }
}

fn check_shapes(network: &Network, alloc: &PowerAllocation, channel: &ChannelState) -> Result<()> {
    let n = network.num_clusters();
    if alloc.p.len() != n || alloc.w.len() != n || channel.num_clusters() != n {
        return Err(Error::Domain(format!(
            "allocation and channel must cover {n} clusters"
        )));
    }
    for (l, c) in network.clusters().enumerate() {
        if alloc.w[l].len() != c.sensors() {
            return Err(Error::Domain(format!(
                "cluster {l}: expected {} weights",
                c.sensors()
            )));
        }
        if !(alloc.p[l] >= 0.0) {
            return Err(Error::Domain(format!("cluster {l}: negative sensor power")));
        }
    }
    Ok(())
}

pub fn links(
    network: &Network,
    alloc: &PowerAllocation,
    channel: &ChannelState,
) -> Result<Vec<ClusterLink>> {
    check_shapes(network, alloc, channel)?;
    Ok(network
        .clusters()
        .enumerate()
        .map(|(l, c)| {
            cluster_link(
                &c,
                alloc.p[l],
                &alloc.weights(l),
                channel.h_hat[l],
                channel.zeta_sq[l],
            )
        })
        .collect())
}

/// MSE of the LMMSE estimate given the channel estimates.
pub fn mse_d(network: &Network, alloc: &PowerAllocation, channel: &ChannelState) -> Result<f64> {
    let prec: f64 = links(network, alloc, channel)?
        .iter()
        .map(ClusterLink::snr)
        .sum();
    Ok(1.0 / (1.0 / network.sigma_theta_sq() + prec))
}

/// MSE with perfect channel knowledge at the fusion center.
pub fn mse_d1(network: &Network, p: &[f64], w: &[Vec<f64>], h: &[Complex64]) -> Result<f64> {
    let alloc = PowerAllocation {
        p_trn: 0.0,
        psi: vec![0.0; p.len()],
        p: p.to_vec(),
        w: w.to_vec(),
    };
    mse_d(network, &alloc, &ChannelState::perfect(h))
}

/// MSE when the sensor-to-head links are error-free and sensors send their
/// raw observations.
pub fn mse_d2(network: &Network, w: &[Vec<f64>], h: &[Complex64]) -> Result<f64> {
    if w.len() != network.num_clusters() || h.len() != network.num_clusters() {
        return Err(Error::Domain(
            "one weight vector and channel per cluster".into(),
        ));
    }
    let mut prec = 1.0 / network.sigma_theta_sq();
    for (l, c) in network.clusters().enumerate() {
        let wl = DVector::from_column_slice(&w[l]);
        let s = wl.sum();
        let h2 = h[l].norm_sqr();
        prec += h2 * s * s / (c.spec.sigma_v_sq + h2 * c.quad(&c.spec.sigma_n, &wl));
    }
    Ok(1.0 / prec)
}

/// MSE when every sensor observation reaches the fusion center noiselessly.
pub fn mse_d3(network: &Network) -> f64 {
    let mut prec = 1.0 / network.sigma_theta_sq();
    for c in &network.config.clusters {
        let ones = DVector::from_element(c.sensors(), 1.0);
        let x = c
            .sigma_n
            .clone()
            .cholesky()
            .expect("validated")
            .solve(&ones);
        prec += ones.dot(&x);
    }
    1.0 / prec
}

/// Dense evaluation `σθ² - σθ⁴ gᴴ C_z⁻¹ g` with the full observation covariance.
pub fn mse_d_full_covariance(
    network: &Network,
    alloc: &PowerAllocation,
    channel: &ChannelState,
) -> Result<f64> {
    let ws = FusionWorkspace::new(network, alloc, channel)?;
    let st = network.sigma_theta_sq();
    let x = ws
        .c_z
        .clone()
        .lu()
        .solve(&ws.g)
        .ok_or_else(|| Error::Numerical("singular observation covariance".into()))?;
    let q = ws.g.dotc(&x);
    Ok(st - st * st * q.re)
}

/// Materialized per-cluster matrices and the joint observation covariance.
#[derive(Debug, Clone)]
pub struct FusionWorkspace {
    /// `Λ1` of each cluster.
    pub lambda1: Vec<DMatrix<f64>>,
    /// Cross-covariance `E{z θ*} / σθ²`.
    pub g: DVector<Complex64>,
    /// Covariance of the fusion-center observations.
    pub c_z: DMatrix<Complex64>,
}

impl FusionWorkspace {
    pub fn new(network: &Network, alloc: &PowerAllocation, channel: &ChannelState) -> Result<Self> {
        check_shapes(network, alloc, channel)?;
        let n = network.num_clusters();
        let st = network.sigma_theta_sq();
        let mut lambda1 = Vec::with_capacity(n);
        let mut g = DVector::zeros(n);
        let mut diag = DVector::zeros(n);
        for (l, c) in network.clusters().enumerate() {
            let p = alloc.p[l];
            let (h2, z2) = (channel.h_hat_sq(l), channel.zeta_sq[l]);
            let lam = &c.derived.pi * (st * z2 * p) + (c.sigma_p(p)) * (h2 + z2);
            let w = alloc.weights(l);
            g[l] = channel.h_hat[l] * (p.sqrt() * w.dot(&c.derived.rho));
            diag[l] = c.spec.sigma_v_sq + w.dot(&(&lam * &w));
            lambda1.push(lam);
        }
        let mut c_z = &g * g.adjoint() * Complex64::new(st, 0.0);
        for l in 0..n {
            c_z[(l, l)] += diag[l];
        }
        Ok(Self { lambda1, g, c_z })
    }
}

/// Complex LMMSE estimate `σθ² a / (1 + σθ² s)` from the fusion-center
/// observations. Its real part is the estimate of the real source.
pub fn lmmse_estimate(
    network: &Network,
    alloc: &PowerAllocation,
    channel: &ChannelState,
    z: &[Complex64],
) -> Result<Complex64> {
    let links = links(network, alloc, channel)?;
    if z.len() != links.len() {
        return Err(Error::Domain("one observation per cluster".into()));
    }
    let st = network.sigma_theta_sq();
    let mut a = Complex64::new(0.0, 0.0);
    let mut s = 0.0;
    for (lk, &zl) in links.iter().zip(z) {
        a += lk.gain.conj() * zl / lk.noise;
        s += lk.snr();
    }
    Ok(a * (st / (1.0 + st * s)))
}
