//! Split of the training budget across clusters.

use crate::model::{estimation_error, Network};

/// Smallest training budget at which every cluster receives pilot power
/// under the error-minimizing split.
pub fn full_activation_threshold(network: &Network) -> f64 {
    let cs = &network.config.clusters;
    let worst = cs
        .iter()
        .min_by(|a, b| {
            (a.sigma_h_sq / a.sigma_v_sq.sqrt()).total_cmp(&(b.sigma_h_sq / b.sigma_v_sq.sqrt()))
        })
        .expect("validated network has clusters");
    let sum_sv: f64 = cs.iter().map(|c| c.sigma_v_sq.sqrt()).sum();
    let sum_ratio: f64 = cs.iter().map(|c| c.sigma_v_sq / c.sigma_h_sq).sum();
    worst.sigma_v_sq.sqrt() / worst.sigma_h_sq * sum_sv - sum_ratio
}

/// Training powers summing to `p_trn`.
///
/// Above [`full_activation_threshold`] this minimizes the summed channel
/// estimation error `Σ ζ_l²`; below it, power is shared in proportion to
/// `σh² / σv`.
pub fn distribute_training(network: &Network, p_trn: f64) -> Vec<f64> {
    let cs = &network.config.clusters;
    if !(p_trn > 0.0) {
        return vec![0.0; cs.len()];
    }
    if p_trn >= full_activation_threshold(network) {
        let kappa = training_multiplier(network, p_trn);
        cs.iter()
            .map(|c| {
                (c.sigma_v_sq / c.sigma_h_sq * (c.sigma_h_sq / (kappa * c.sigma_v_sq.sqrt()) - 1.0))
                    .max(0.0)
            })
            .collect()
    } else {
        let total: f64 = cs.iter().map(|c| c.sigma_h_sq / c.sigma_v_sq.sqrt()).sum();
        cs.iter()
            .map(|c| c.sigma_h_sq * p_trn / (c.sigma_v_sq.sqrt() * total))
            .collect()
    }
}

/// `κ = Σ σv / (P_trn + Σ σv² / σh²)`, the square root of half the common
/// marginal error reduction.
pub fn training_multiplier(network: &Network, p_trn: f64) -> f64 {
    let cs = &network.config.clusters;
    let sum_sv: f64 = cs.iter().map(|c| c.sigma_v_sq.sqrt()).sum();
    let sum_ratio: f64 = cs.iter().map(|c| c.sigma_v_sq / c.sigma_h_sq).sum();
    sum_sv / (p_trn + sum_ratio)
}

/// Largest relative spread of `-∂ζ_l²/∂ψ_l` around `2κ²`, plus the budget
/// mismatch. Only meaningful at or above the full-activation threshold.
pub fn training_residual(network: &Network, psi: &[f64], p_trn: f64) -> f64 {
    let kappa = training_multiplier(network, p_trn);
    let mut worst: f64 = 0.0;
    for (c, &p) in network.config.clusters.iter().zip(psi) {
        let den = c.sigma_v_sq + p * c.sigma_h_sq;
        let slope = 2.0 * c.sigma_h_sq * c.sigma_h_sq * c.sigma_v_sq / (den * den);
        worst = worst.max((slope / (2.0 * kappa * kappa) - 1.0).abs());
    }
    let sum: f64 = psi.iter().sum();
    worst.max((sum - p_trn).abs() / p_trn.max(f64::MIN_POSITIVE))
}

/// Summed estimation error `Σ ζ_l²` for a training split.
pub fn total_estimation_error(network: &Network, psi: &[f64]) -> f64 {
    network
        .config
        .clusters
        .iter()
        .zip(psi)
        .map(|(c, &p)| estimation_error(c.sigma_h_sq, c.sigma_v_sq, p))
        .sum()
}
