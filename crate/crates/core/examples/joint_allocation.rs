//! Jointly optimizes training, sensor powers and fusion weights for one
//! channel realization of a random ten-cluster network.

use wsn_fusion::harness::scenario_rng;
use wsn_fusion::harness::ScenarioSpec;
use wsn_fusion::model::{from_db, to_db, ChannelDraw};
use wsn_fusion::optimizer::{solve_joint, SolverOptions};

fn main() -> wsn_fusion::Result<()> {
    let spec = ScenarioSpec::default();
    let net = spec.network()?;
    let draw = ChannelDraw::sample(&net, &mut scenario_rng(spec.seed, 1));
    let r = solve_joint(&net, &draw, from_db(10.0), &SolverOptions::default())?;
    println!(
        "MSE {:.5} after {} iterations, training share {:.3}",
        r.mse,
        r.iterations,
        1.0 - r.sigma
    );
    println!("cluster  active  psi_dB   V_dB    P_dB");
    for l in 0..net.num_clusters() {
        println!(
            "{:<8} {:<7} {:>7.2} {:>7.2} {:>7.2}",
            l + 1,
            r.active[l],
            to_db(r.alloc.psi[l]),
            to_db(r.cluster_powers[l]),
            to_db(r.alloc.p[l])
        );
    }
    println!(
        "residuals: power {:.1e}, single-cluster {:.1e}, water-fill {:.1e}",
        r.kkt.power, r.kkt.cluster, r.kkt.water_fill
    );
    Ok(())
}
