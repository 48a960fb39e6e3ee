//! Per-cluster powers of three clusters that differ only in head-link
//! quality, and how far their budgets drift apart.

use wsn_fusion::harness::{
    budget_spread, three_cluster_traces, DbGrid, ScenarioKind, ScenarioSpec,
};

fn main() -> wsn_fusion::Result<()> {
    let spec = ScenarioSpec {
        kind: ScenarioKind::ThreeCluster,
        ptot_db: DbGrid::Range {
            start: -10.0,
            stop: 30.0,
            step: 5.0,
        },
        ..ScenarioSpec::default()
    };
    let rows = three_cluster_traces(&spec)?;
    println!("P_tot dB cluster  psi_dB   V_dB    P_dB  head_dB  active");
    for r in &rows {
        println!(
            "{:>8} {:>7} {:>7.2} {:>7.2} {:>7.2} {:>7.2}  {}",
            r.ptot_db, r.cluster, r.psi_db, r.v_db, r.p_db, r.head_db, r.active
        );
    }
    for db in [10.0, 20.0, 30.0] {
        println!(
            "budget spread at {db} dB: {:.1}%",
            100.0 * budget_spread(&rows, db).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
