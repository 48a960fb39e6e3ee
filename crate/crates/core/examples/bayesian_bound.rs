//! Bayesian bound of a single-sensor network, by series expansion and by
//! simulation, next to the MSE it bounds.

use wsn_fusion::crb::{bayesian_crb, monte_carlo_crb, CrbParams, MixtureRule, U2Model};
use wsn_fusion::estimator::mse_d3;
use wsn_fusion::harness::scenario_rng;
use wsn_fusion::model::{
    ChannelDraw, ChannelState, ClusterSpec, DataNoise, Network, NetworkConfig,
};
use wsn_fusion::optimizer::{solve_joint, SolverOptions};

fn main() -> wsn_fusion::Result<()> {
    let net = Network::new(NetworkConfig {
        sigma_theta_sq: 1.0,
        clusters: vec![ClusterSpec::diagonal(&[0.5], &[0.5], 0.5, 0.5)],
    })?;
    let draw = ChannelDraw::sample(&net, &mut scenario_rng(7, 1));
    let r = solve_joint(&net, &draw, 1.0, &SolverOptions::default())?;
    let channel = ChannelState::from_draw(&net, &r.alloc.psi, &draw)?;
    let noise = DataNoise::TwoSigmaV;
    let series = bayesian_crb(&net, &r.alloc, &channel, noise, &CrbParams::default())?;
    let (sim, est) = monte_carlo_crb(
        &net,
        &r.alloc,
        &channel,
        noise,
        U2Model::Complex,
        5_000,
        &MixtureRule::default(),
        &mut scenario_rng(7, 2),
    )?;
    println!("D3              {:.5}", mse_d3(&net));
    println!("bound, series   {series:.5}");
    println!(
        "bound, simulated {sim:.5} (information {:.4} ± {:.4})",
        est.mean, est.std_err
    );
    println!("D               {:.5}", r.mse);
    Ok(())
}
