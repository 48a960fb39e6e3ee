//! Pilot-based channel estimation: the closed-form error variance against
//! simulation for a range of training powers.

use wsn_fusion::harness::scenario_rng;
use wsn_fusion::model::{
    estimation_error, ChannelDraw, ChannelState, ClusterSpec, Network, NetworkConfig,
};

fn main() -> wsn_fusion::Result<()> {
    let (sigma_h_sq, sigma_v_sq) = (0.8, 0.3);
    let net = Network::new(NetworkConfig {
        sigma_theta_sq: 1.0,
        clusters: vec![ClusterSpec::diagonal(
            &[0.5],
            &[0.5],
            sigma_h_sq,
            sigma_v_sq,
        )],
    })?;
    let draws = 200_000;
    println!("psi      zeta_sq  simulated  E|h_hat|^2+zeta_sq");
    for psi in [0.0, 0.3, 1.0, 3.0, 10.0, 30.0] {
        let mut rng = scenario_rng(5, 1);
        let (mut err, mut hat) = (0.0, 0.0);
        for _ in 0..draws {
            let c = ChannelState::from_draw(&net, &[psi], &ChannelDraw::sample(&net, &mut rng))?;
            err += (c.h[0] - c.h_hat[0]).norm_sqr();
            hat += c.h_hat[0].norm_sqr();
        }
        let zeta = estimation_error(sigma_h_sq, sigma_v_sq, psi);
        println!(
            "{psi:<8} {zeta:.5}  {:.5}    {:.5} (2σh² = {})",
            err / draws as f64,
            hat / draws as f64 + zeta,
            2.0 * sigma_h_sq
        );
    }
    Ok(())
}
