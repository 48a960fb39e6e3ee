use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::network::Network;
use crate::error::{Error, Result};

/// Draws from `CN(0, var)`: real and imaginary parts each carry `var / 2`.
pub fn cn_sample<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Raw fading coefficients and pilot noise for one trial, independent of the
/// training power so the same draw can be reused across budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub h: Vec<Complex64>,
    pub nu: Vec<Complex64>,
}

impl ChannelDraw {
    pub fn sample<R: Rng + ?Sized>(network: &Network, rng: &mut R) -> Self {
        let mut h = Vec::with_capacity(network.num_clusters());
        let mut nu = Vec::with_capacity(network.num_clusters());
        for c in &network.config.clusters {
            h.push(cn_sample(rng, 2.0 * c.sigma_h_sq));
            nu.push(cn_sample(rng, 2.0 * c.sigma_v_sq));
        }
        Self { h, nu }
    }
}

/// True channels, pilot observations and the MMSE channel estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub h: Vec<Complex64>,
    pub z_pilot: Vec<Complex64>,
    pub h_hat: Vec<Complex64>,
    pub zeta_sq: Vec<f64>,
}

impl ChannelState {
    /// Estimates from a pilot `z = sqrt(psi) h + nu` for each cluster.
    pub fn from_draw(network: &Network, psi: &[f64], draw: &ChannelDraw) -> Result<Self> {
        let n = network.num_clusters();
        if psi.len() != n || draw.h.len() != n {
            return Err(Error::Domain(format!(
                "expected {n} training powers and channels"
            )));
        }
        if psi.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::Domain("training powers must be non-negative".into()));
        }
        let mut out = Self {
            h: draw.h.clone(),
            z_pilot: Vec::with_capacity(n),
            h_hat: Vec::with_capacity(n),
            zeta_sq: Vec::with_capacity(n),
        };
        for (l, c) in network.config.clusters.iter().enumerate() {
            let z = draw.h[l] * psi[l].sqrt() + draw.nu[l];
            let den = c.sigma_v_sq + psi[l] * c.sigma_h_sq;
            out.z_pilot.push(z);
            out.h_hat.push(z * (c.sigma_h_sq * psi[l].sqrt() / den));
            out.zeta_sq
                .push(estimation_error(c.sigma_h_sq, c.sigma_v_sq, psi[l]));
        }
        Ok(out)
    }

    /// Perfect channel knowledge: `h_hat = h`, zero estimation error.
    pub fn perfect(h: &[Complex64]) -> Self {
        Self {
            h: h.to_vec(),
            z_pilot: vec![Complex64::new(0.0, 0.0); h.len()],
            h_hat: h.to_vec(),
            zeta_sq: vec![0.0; h.len()],
        }
    }

    /// Deterministic stand-in used when planning before the channel is
    /// observed: `|h_hat|^2` is replaced by its mean `2 σh² - ζ²`.
    pub fn surrogate(network: &Network, psi: &[f64]) -> Result<Self> {
        if psi.len() != network.num_clusters() {
            return Err(Error::Domain(
                "one training power per cluster is required".into(),
            ));
        }
        let mut zeta_sq = Vec::with_capacity(psi.len());
        let mut h_hat = Vec::with_capacity(psi.len());
        for (c, &p) in network.config.clusters.iter().zip(psi) {
            let z2 = estimation_error(c.sigma_h_sq, c.sigma_v_sq, p);
            zeta_sq.push(z2);
            h_hat.push(Complex64::new(
                (2.0 * c.sigma_h_sq - z2).max(0.0).sqrt(),
                0.0,
            ));
        }
        Ok(Self {
            h: h_hat.clone(),
            z_pilot: vec![Complex64::new(0.0, 0.0); psi.len()],
            h_hat,
            zeta_sq,
        })
    }

    pub fn num_clusters(&self) -> usize {
        self.h_hat.len()
    }

    pub fn h_hat_sq(&self, l: usize) -> f64 {
        self.h_hat[l].norm_sqr()
    }
}

/// Channel-estimation error variance `ζ² = 2σh²σv² / (σv² + ψσh²)`.
pub fn estimation_error(sigma_h_sq: f64, sigma_v_sq: f64, psi: f64) -> f64 {
    2.0 * sigma_h_sq * sigma_v_sq / (sigma_v_sq + psi * sigma_h_sq)
}

pub fn generate_channels<R: Rng + ?Sized>(
    network: &Network,
    psi: &[f64],
    rng: &mut R,
) -> Result<ChannelState> {
    ChannelState::from_draw(network, psi, &ChannelDraw::sample(network, rng))
}

/// Training powers, sensor power levels and fusion weights for every cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub p_trn: f64,
    pub psi: Vec<f64>,
    pub p: Vec<f64>,
    pub w: Vec<Vec<f64>>,
}

impl PowerAllocation {
    /// No training, zero power everywhere.
    pub fn zeros(network: &Network) -> Self {
        Self {
            p_trn: 0.0,
            psi: vec![0.0; network.num_clusters()],
            p: vec![0.0; network.num_clusters()],
            w: network
                .config
                .sensors()
                .into_iter()
                .map(|k| vec![0.0; k])
                .collect(),
        }
    }

    pub fn weights(&self, l: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.w[l])
    }

    /// Per-cluster data-phase budget `V_l = P_l + wᵀ R w`.
    pub fn cluster_powers(&self, network: &Network) -> Vec<f64> {
        (0..network.num_clusters())
            .map(|l| {
                network
                    .cluster(l)
                    .cluster_power(self.p[l], &self.weights(l))
            })
            .collect()
    }

    /// Head transmit powers `wᵀ R w`.
    pub fn head_powers(&self, network: &Network) -> Vec<f64> {
        (0..network.num_clusters())
            .map(|l| {
                network
                    .cluster(l)
                    .ch_transmit_power(self.p[l], &self.weights(l))
            })
            .collect()
    }

    pub fn active(&self) -> Vec<bool> {
        self.w.iter().map(|w| w.iter().any(|&x| x != 0.0)).collect()
    }
}

/// Total network power: training plus every cluster's data-phase share.
pub fn network_power(network: &Network, alloc: &PowerAllocation) -> f64 {
    alloc.p_trn + alloc.cluster_powers(network).iter().sum::<f64>()
}

/// Variance of the head-to-center receiver noise in the data phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataNoise {
    /// `v ~ CN(0, 2σv²)`, the same convention as the pilot noise.
    #[default]
    TwoSigmaV,
    /// `v ~ CN(0, σv²)`.
    SigmaV,
}

impl DataNoise {
    pub fn variance(self, sigma_v_sq: f64) -> f64 {
        match self {
            DataNoise::TwoSigmaV => 2.0 * sigma_v_sq,
            DataNoise::SigmaV => sigma_v_sq,
        }
    }
}

/// One realization of the data phase.
#[derive(Debug, Clone)]
pub struct RoundSample {
    pub theta: f64,
    /// Head received signals, one vector per cluster.
    pub y: Vec<DVector<f64>>,
    /// Fusion-center observations, one per cluster.
    pub z: Vec<Complex64>,
}

/// Draws `θ`, the sensor observations and the fusion-center signals
/// `z_l = h_l wᵀ y_l + v_l` for a fixed allocation and channel.
pub fn simulate_round<R: Rng + ?Sized>(
    network: &Network,
    alloc: &PowerAllocation,
    channel: &ChannelState,
    noise: DataNoise,
    rng: &mut R,
) -> RoundSample {
    let theta = network.sigma_theta_sq().sqrt() * rng.sample::<f64, _>(StandardNormal);
    let mut y = Vec::with_capacity(network.num_clusters());
    let mut z = Vec::with_capacity(network.num_clusters());
    for (l, c) in network.clusters().enumerate() {
        let k = c.sensors();
        let white = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = network.noise_factor(l) * white;
        let amp = c.derived.sqrt_d.map(|s| s * alloc.p[l].sqrt());
        let yl = DVector::from_fn(k, |i, _| {
            let q = c.spec.sigma_q[i].sqrt() * rng.sample::<f64, _>(StandardNormal);
            amp[i] * (theta + n[i]) + q
        });
        let s = alloc.weights(l).dot(&yl);
        let v = cn_sample(rng, noise.variance(c.spec.sigma_v_sq));
        z.push(channel.h[l] * s + v);
        y.push(yl);
    }
    RoundSample { theta, y, z }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClusterSpec, NetworkConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net() -> Network {
        Network::new(NetworkConfig {
            sigma_theta_sq: 1.0,
            clusters: vec![
                ClusterSpec::diagonal(&[1.0], &[1.0], 0.5, 0.5),
                ClusterSpec::diagonal(&[0.5, 0.7], &[0.2, 0.3], 1.0, 0.25),
            ],
        })
        .unwrap()
    }

    #[test]
    fn estimation_error_limits() {
        assert!((estimation_error(0.5, 0.5, 0.0) - 1.0).abs() < 1e-15);
        assert!((estimation_error(0.5, 0.5, 0.5) - 0.5 / 0.75).abs() < 1e-15);
        assert!(estimation_error(1.0, 1.0, 1e12) < 1e-11);
    }

    #[test]
    fn surrogate_preserves_total_power() {
        let s = ChannelState::surrogate(&net(), &[0.5, 2.0]).unwrap();
        for l in 0..2 {
            let c = &net().config.clusters[l];
            assert!((s.h_hat_sq(l) + s.zeta_sq[l] - 2.0 * c.sigma_h_sq).abs() < 1e-14);
        }
    }

    #[test]
    fn estimate_is_unbiased_and_error_matches() {
        let n = net();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let psi = [0.5, 2.0];
        let trials = 40_000;
        let mut err = [0.0; 2];
        let mut hat = [0.0; 2];
        for _ in 0..trials {
            let s = generate_channels(&n, &psi, &mut rng).unwrap();
            for l in 0..2 {
                err[l] += (s.h[l] - s.h_hat[l]).norm_sqr();
                hat[l] += s.h_hat_sq(l);
            }
        }
        for l in 0..2 {
            let c = &n.config.clusters[l];
            let z2 = estimation_error(c.sigma_h_sq, c.sigma_v_sq, psi[l]);
            assert!((err[l] / trials as f64 - z2).abs() < 0.03 * z2);
            assert!(
                (hat[l] / trials as f64 - (2.0 * c.sigma_h_sq - z2)).abs()
                    < 0.03 * 2.0 * c.sigma_h_sq
            );
        }
    }

    #[test]
    fn network_power_counts_training() {
        let n = net();
        let alloc = PowerAllocation {
            p_trn: 0.3,
            psi: vec![0.1, 0.2],
            p: vec![1.0, 2.0],
            w: vec![vec![0.5], vec![0.1, 0.2]],
        };
        let manual: f64 = (0..2)
            .map(|l| {
                let c = n.cluster(l);
                let w = alloc.weights(l);
                alloc.p[l] + w.dot(&(c.r_t(alloc.p[l]) * &w))
            })
            .sum();
        assert!((network_power(&n, &alloc) - 0.3 - manual).abs() < 1e-12);
    }

    #[test]
    fn simulated_head_power_matches_formula() {
        let n = net();
        let alloc = PowerAllocation {
            p_trn: 0.0,
            psi: vec![0.0; 2],
            p: vec![1.5, 0.8],
            w: vec![vec![0.7], vec![0.4, -0.3]],
        };
        let ch = ChannelState::perfect(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 40_000;
        let mut pw = [0.0; 2];
        for _ in 0..trials {
            let r = simulate_round(&n, &alloc, &ch, DataNoise::TwoSigmaV, &mut rng);
            for l in 0..2 {
                pw[l] += alloc.weights(l).dot(&r.y[l]).powi(2);
            }
        }
        let expect = alloc.head_powers(&n);
        for l in 0..2 {
            assert!((pw[l] / trials as f64 - expect[l]).abs() < 0.03 * expect[l]);
        }
    }
}
