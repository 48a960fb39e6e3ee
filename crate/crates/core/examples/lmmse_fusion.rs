//! Fuses simulated cluster-head signals with the LMMSE estimator and compares
//! the empirical error with the closed-form MSE. The closed form averages over
//! the channel uncertainty left after training, so each round redraws the
//! true gains around their estimates.

use wsn_fusion::estimator::{lmmse_estimate, mse_d};
use wsn_fusion::harness::scenario_rng;
use wsn_fusion::model::{
    cn_sample, simulate_round, ChannelDraw, ChannelState, ClusterSpec, DataNoise, Network,
    NetworkConfig,
};
use wsn_fusion::optimizer::{solve_joint, SolverOptions};

fn main() -> wsn_fusion::Result<()> {
    let net = Network::new(NetworkConfig {
        sigma_theta_sq: 1.0,
        clusters: vec![
            ClusterSpec::diagonal(&[0.2, 0.4, 0.3], &[0.1, 0.2, 0.1], 0.6, 0.2),
            ClusterSpec::diagonal(&[0.5, 0.5], &[0.3, 0.3], 0.4, 0.3),
        ],
    })?;
    let draw = ChannelDraw::sample(&net, &mut scenario_rng(3, 1));
    let report = solve_joint(&net, &draw, 5.0, &SolverOptions::default())?;
    let channel = ChannelState::from_draw(&net, &report.alloc.psi, &draw)?;
    let rounds = 200_000;
    let mut rng = scenario_rng(3, 2);
    let mut sq = 0.0;
    let mut ch = channel.clone();
    for _ in 0..rounds {
        for l in 0..ch.h.len() {
            ch.h[l] = ch.h_hat[l] + cn_sample(&mut rng, ch.zeta_sq[l]);
        }
        let s = simulate_round(&net, &report.alloc, &ch, DataNoise::SigmaV, &mut rng);
        let est = lmmse_estimate(&net, &report.alloc, &ch, &s.z)?;
        sq += (est - s.theta).norm_sqr();
    }
    println!(
        "closed-form D   {:.5}",
        mse_d(&net, &report.alloc, &channel)?
    );
    println!(
        "empirical MSE   {:.5} over {rounds} rounds",
        sq / rounds as f64
    );
    Ok(())
}
