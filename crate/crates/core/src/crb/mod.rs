//! Bayesian Cramér-Rao bound for the fused estimate.
//!
//! Conditioned on `ĥ` and `θ`, the fusion-center signal of a cluster is
//! `z = u1 u2 + v` with `u1 ~ CN(ĥ, ζ²)`, `u2` the fused head signal with mean
//! `a3 θ` and variance `σ̄²`, and `v` the receiver noise. The series evaluator
//! treats `u2` as proper complex Gaussian so that the product density has the
//! closed Bessel series of [`series`]; [`mixture`] simulates either form.

pub mod bessel;
pub mod fisher;
pub mod mixture;
pub mod series;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelState, DataNoise, Network, PowerAllocation};

pub use fisher::{
    averaged_crb, bayesian_crb, cluster_information, fisher_g2, ConditionalGrid, CrbParams,
    ProductNodes, QuadSpec, SeriesOptionsToml,
};
pub use mixture::{
    mixture_pdf, monte_carlo_crb, monte_carlo_information, sample_z, McEstimate, MixtureRule,
    U2Model,
};
pub use series::{product_gaussian_pdf, product_gaussian_terms, SeriesOptions, SeriesValue};

/// Everything the conditional density of one cluster depends on besides `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbCluster {
    pub h_hat: Complex64,
    pub zeta_sq: f64,
    /// Gain of `θ` in the fused head signal, `√P wᵀ√d`.
    pub a3: f64,
    /// Variance of the fused head signal given `θ`, `wᵀ(PΔ + Σq)w`.
    pub sigma_bar_sq: f64,
    /// Variance of the receiver noise `v`.
    pub noise_var: f64,
}

impl CrbCluster {
    pub fn from_allocation(
        network: &Network,
        alloc: &PowerAllocation,
        channel: &ChannelState,
        l: usize,
        noise: DataNoise,
    ) -> Result<Self> {
        if l >= network.num_clusters() {
            return Err(Error::Domain(format!("cluster index {l} out of range")));
        }
        let view = network.cluster(l);
        let w: DVector<f64> = alloc.weights(l);
        let p = alloc.p[l];
        Ok(Self {
            h_hat: channel.h_hat[l],
            zeta_sq: channel.zeta_sq[l],
            a3: p.sqrt() * w.dot(&view.derived.rho),
            sigma_bar_sq: view.quad(&view.sigma_p(p), &w),
            noise_var: noise.variance(view.spec.sigma_v_sq),
        })
    }

    /// `a3² / σ̄²`, the signal-to-noise ratio of the fused head signal per unit `θ²`.
    pub fn a2(&self) -> f64 {
        self.a3 * self.a3 / self.sigma_bar_sq
    }

    /// True when `z` carries no information about `θ`.
    pub fn is_silent(&self) -> bool {
        self.a3 == 0.0 || self.h_hat.norm_sqr() + self.zeta_sq == 0.0
    }

    pub fn mean_u2(&self, theta: f64) -> f64 {
        self.a3 * theta
    }
}

/// One entry per cluster of the allocation.
pub fn clusters_of(
    network: &Network,
    alloc: &PowerAllocation,
    channel: &ChannelState,
    noise: DataNoise,
) -> Result<Vec<CrbCluster>> {
    (0..network.num_clusters())
        .map(|l| CrbCluster::from_allocation(network, alloc, channel, l, noise))
        .collect()
}

/// `G⁻¹ = 1 / (σθ⁻² + E G₂)` for the Gaussian prior.
pub fn crb_from_information(sigma_theta_sq: f64, g2: f64) -> f64 {
    1.0 / (1.0 / sigma_theta_sq + g2)
}
