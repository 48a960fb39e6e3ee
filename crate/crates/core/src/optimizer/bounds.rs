//! Allocations for the two idealized networks that bound the achievable MSE.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::inner::ClusterStats;
use super::joint::{assemble, block_ascent, KktResiduals, SolveReport, SolverOptions, Variant};
use super::waterfill::{water_fill, water_fill_residual, WaterLevel};
use crate::error::{Error, Result};
use crate::estimator::mse_d2;
use crate::model::{ChannelState, ClusterView, Network, PowerAllocation};

/// Perfect channel knowledge and no training: the whole budget goes to the
/// data phase.
pub fn solve_perfect_csi(
    network: &Network,
    h: &[Complex64],
    p_tot: f64,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if h.len() != network.num_clusters() {
        return Err(Error::Domain("one channel per cluster".into()));
    }
    if !(p_tot > 0.0 && p_tot.is_finite()) {
        return Err(Error::DegenerateBudget(format!("total power {p_tot}")));
    }
    let stats: Vec<ClusterStats> = h
        .iter()
        .map(|x| ClusterStats::perfect(x.norm_sqr()))
        .collect();
    let run = block_ascent(network, &stats, p_tot, opts.eps, opts)?;
    let psi = vec![0.0; h.len()];
    let mut report = assemble(
        network,
        Variant::PerfectCsi,
        p_tot,
        &psi,
        &ChannelState::perfect(h),
        run,
    )?;
    report.variant = Variant::PerfectCsi;
    Ok(report)
}

/// `σθ² 𝟙𝟙ᵀ + Σn`, the covariance of the raw observations in a cluster.
pub fn observation_covariance(view: &ClusterView) -> DMatrix<f64> {
    let k = view.sensors();
    DMatrix::from_element(k, k, view.sigma_theta_sq) + &view.spec.sigma_n
}

/// Sensors send raw observations over error-free links; only the heads'
/// powers are allocated. The power used is `Σ wᵀ(σθ²𝟙𝟙ᵀ + Σn)w`.
pub fn solve_error_free_links(
    network: &Network,
    h: &[Complex64],
    p_tot: f64,
) -> Result<SolveReport> {
    let n = network.num_clusters();
    if h.len() != n {
        return Err(Error::Domain("one channel per cluster".into()));
    }
    if !(p_tot > 0.0 && p_tot.is_finite()) {
        return Err(Error::DegenerateBudget(format!("total power {p_tot}")));
    }
    let st = network.sigma_theta_sq();
    let mut dirs = Vec::with_capacity(n);
    let mut taus = Vec::with_capacity(n);
    let mut levels = Vec::with_capacity(n);
    for (l, c) in network.clusters().enumerate() {
        let ones = DVector::from_element(c.sensors(), 1.0);
        let x = observation_covariance(&c)
            .cholesky()
            .ok_or_else(|| Error::Numerical(format!("cluster {l}: observation covariance")))?
            .solve(&ones);
        let tau = ones.dot(&x);
        let h2 = h[l].norm_sqr();
        let a = h2.sqrt() * tau.sqrt() / c.spec.sigma_v_sq.sqrt();
        let beta = if a > 0.0 {
            c.spec.sigma_v_sq / (h2 * (1.0 - st * tau))
        } else {
            0.0
        };
        levels.push(WaterLevel { p: 0.0, beta, a });
        dirs.push(x);
        taus.push(tau);
    }
    let fill = water_fill(&levels, p_tot)?;
    let w: Vec<Vec<f64>> = (0..n)
        .map(|l| {
            (&dirs[l] * (fill.v[l] / taus[l]).sqrt())
                .iter()
                .copied()
                .collect()
        })
        .collect();
    let used: f64 = network
        .clusters()
        .zip(&w)
        .map(|(c, wl)| {
            let wl = DVector::from_column_slice(wl);
            c.quad(&observation_covariance(&c), &wl)
        })
        .sum();
    let mse = mse_d2(network, &w, h)?;
    let objective = 1.0 / mse - 1.0 / st;
    let alloc = PowerAllocation {
        p_trn: 0.0,
        psi: vec![0.0; n],
        p: vec![0.0; n],
        w,
    };
    Ok(SolveReport {
        variant: Variant::ErrorFreeLinks,
        p_tot,
        cluster_powers: fill.v.clone(),
        active: fill.active.clone(),
        objective,
        mse,
        sigma: 1.0,
        iterations: 1,
        trace: vec![objective],
        kkt: KktResiduals {
            power: (used - p_tot).abs() / p_tot,
            cluster: 0.0,
            multiplier_gap: 0.0,
            water_fill: water_fill_residual(&levels, &fill, p_tot),
            water_fill_consistent: fill.consistent,
            training: None,
            lambda: fill.lambda,
            kappa: None,
        },
        alloc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{mse_d1, mse_d3};
    use crate::harness::{random_network, scenario_rng, RandomSpec};
    use crate::model::ChannelDraw;

    fn setup(seed: u64) -> (Network, Vec<Complex64>) {
        let spec = RandomSpec {
            clusters: 3,
            max_sensors: 4,
            ..RandomSpec::default()
        };
        let net = random_network(&spec, 1.0, &mut scenario_rng(seed, 0)).unwrap();
        let h = ChannelDraw::sample(&net, &mut scenario_rng(seed, 1)).h;
        (net, h)
    }

    #[test]
    fn error_free_links_approach_the_centralized_bound() {
        let (net, h) = setup(5);
        let r = solve_error_free_links(&net, &h, 1e7).unwrap();
        let d3 = mse_d3(&net);
        assert!(r.mse > d3 && (r.mse - d3) / d3 < 1e-3, "{} vs {d3}", r.mse);
    }

    #[test]
    fn error_free_links_spend_the_budget() {
        let (net, h) = setup(6);
        let r = solve_error_free_links(&net, &h, 2.0).unwrap();
        assert!(r.kkt.power < 1e-10);
        assert!(r.kkt.water_fill < 1e-8);
    }

    #[test]
    fn error_free_links_beat_every_power_split() {
        // Grid over the split of the budget between two clusters, each using
        // its best direction at the given power.
        let (net, h) = setup(7);
        let net = Network::new(crate::model::NetworkConfig {
            sigma_theta_sq: 1.0,
            clusters: net.config.clusters[..2].to_vec(),
        })
        .unwrap();
        let h = &h[..2];
        let p_tot = 1.5;
        let r = solve_error_free_links(&net, h, p_tot).unwrap();
        let dirs: Vec<(DVector<f64>, f64)> = net
            .clusters()
            .map(|c| {
                let ones = DVector::from_element(c.sensors(), 1.0);
                let x = observation_covariance(&c).cholesky().unwrap().solve(&ones);
                let t = ones.dot(&x);
                (x, t)
            })
            .collect();
        let mut best = f64::INFINITY;
        for i in 0..=2000 {
            let v1 = p_tot * i as f64 / 2000.0;
            let v = [v1, p_tot - v1];
            let w: Vec<Vec<f64>> = (0..2)
                .map(|l| {
                    (&dirs[l].0 * (v[l] / dirs[l].1).sqrt())
                        .iter()
                        .copied()
                        .collect()
                })
                .collect();
            best = best.min(mse_d2(&net, &w, h).unwrap());
        }
        assert!(r.mse <= best * (1.0 + 1e-9), "{} vs grid {best}", r.mse);
        assert!((r.mse - best) / best < 1e-5);
    }

    #[test]
    fn perfect_channel_sits_between_links_and_estimated() {
        let (net, h) = setup(9);
        let opts = SolverOptions::default();
        let p1 = solve_perfect_csi(&net, &h, 3.0, &opts).unwrap();
        let p2 = solve_error_free_links(&net, &h, 3.0).unwrap();
        let direct = mse_d1(&net, &p1.alloc.p, &p1.alloc.w, &h).unwrap();
        assert!(((direct - p1.mse) / p1.mse).abs() < 1e-10);
        assert!(mse_d3(&net) < p2.mse && p2.mse < p1.mse);
    }
}
