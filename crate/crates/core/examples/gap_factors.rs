//! Cost of each restriction of the joint allocation, normalized by the room
//! between the prior variance and the bound.

use wsn_fusion::harness::{run_gaps, DbGrid, ScenarioSpec};

fn main() -> wsn_fusion::Result<()> {
    let spec = ScenarioSpec {
        trials: 10,
        ptot_db: DbGrid::List(vec![-10.0, -4.0, 0.0, 6.0, 12.0]),
        ..ScenarioSpec::default()
    };
    let t = run_gaps(&spec)?;
    println!("P_tot dB   g_t(5%)  g_t(25%) g_t(60%) g_c      g_d");
    for r in &t.rows {
        println!(
            "{:>8} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r.ptot_db, r.g_t[0], r.g_t[1], r.g_t[2], r.g_c, r.g_d
        );
    }
    Ok(())
}
