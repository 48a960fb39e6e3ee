//! The joint allocation against its restricted variants and the two
//! idealized bounds on one channel draw.

use wsn_fusion::estimator::mse_d3;
use wsn_fusion::harness::{scenario_rng, ScenarioSpec};
use wsn_fusion::model::{from_db, ChannelDraw};
use wsn_fusion::optimizer::{
    solve_common_head_power, solve_common_sensor_power, solve_error_free_links,
    solve_fixed_training, solve_joint, solve_perfect_csi, SolverOptions,
};

fn main() -> wsn_fusion::Result<()> {
    let spec = ScenarioSpec::default();
    let net = spec.network()?;
    let opts = SolverOptions::default();
    let draw = ChannelDraw::sample(&net, &mut scenario_rng(spec.seed, 1));
    let p = from_db(6.0);
    let rows = [
        ("joint", solve_joint(&net, &draw, p, &opts)?.mse),
        (
            "fixed training 25%",
            solve_fixed_training(&net, &draw, p, 0.25, &opts)?.mse,
        ),
        (
            "common sensor power",
            solve_common_sensor_power(&net, &draw, p, &opts)?.mse,
        ),
        (
            "common head power",
            solve_common_head_power(&net, &draw, p, &opts)?.mse,
        ),
        (
            "perfect channel",
            solve_perfect_csi(&net, &draw.h, p, &opts)?.mse,
        ),
        (
            "error-free links",
            solve_error_free_links(&net, &draw.h, p)?.mse,
        ),
        ("all observations", mse_d3(&net)),
    ];
    for (name, mse) in rows {
        println!("{name:<20} {mse:.5}");
    }
    Ok(())
}
