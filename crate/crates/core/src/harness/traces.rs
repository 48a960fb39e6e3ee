//! Per-cluster power traces against the total budget.

use serde::Serialize;

use super::scenario::ScenarioSpec;
use super::sweep::solver_options;
use crate::error::Result;
use crate::model::{to_db, ChannelState};
use crate::optimizer::{optimize_training, solve_given_training};

/// One cluster at one budget. Powers are in dB; an inactive cluster has
/// `-inf` for the data-phase entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub ptot_db: f64,
    pub cluster: usize,
    /// Training power `ψ_l`.
    pub psi_db: f64,
    /// Data-phase budget `𝒱_l`.
    pub v_db: f64,
    /// Sensor power level `P_l`.
    pub p_db: f64,
    /// Head transmit power `𝒫_l`.
    pub head_db: f64,
    /// Everything the head spends, `𝒫_l + ψ_l`.
    pub ch_db: f64,
    /// Power of each sensor, `P_l / K_l`.
    pub sensor_db: f64,
    pub active: bool,
}

/// Joint allocation on the mean channel at every budget of the grid.
pub fn three_cluster_traces(spec: &ScenarioSpec) -> Result<Vec<TraceRow>> {
    spec.validate()?;
    let network = spec.network()?;
    let opts = solver_options(spec);
    let mut rows = Vec::new();
    for (db, p_tot) in spec.grid() {
        let split = optimize_training(&network, p_tot, &opts)?;
        let channel = ChannelState::surrogate(&network, &split.psi)?;
        let r = solve_given_training(&network, &channel, &split.psi, p_tot, &opts)?;
        let head = r.alloc.head_powers(&network);
        for (l, c) in network.clusters().enumerate() {
            rows.push(TraceRow {
                ptot_db: db,
                cluster: l + 1,
                psi_db: to_db(r.alloc.psi[l]),
                v_db: to_db(r.cluster_powers[l]),
                p_db: to_db(r.alloc.p[l]),
                head_db: to_db(head[l]),
                ch_db: to_db(head[l] + r.alloc.psi[l]),
                sensor_db: to_db(r.alloc.p[l] / c.sensors() as f64),
                active: r.active[l],
            });
        }
    }
    Ok(rows)
}

/// Relative spread `(max − min) / max` of the active clusters' `𝒱_l` at the
/// given budget.
pub fn budget_spread(rows: &[TraceRow], ptot_db: f64) -> Option<f64> {
    let v: Vec<f64> = rows
        .iter()
        .filter(|r| r.ptot_db == ptot_db)
        .map(|r| 10f64.powf(r.v_db / 10.0))
        .collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    (max > 0.0).then(|| (max - min) / max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{DbGrid, ScenarioKind, ThreeClusterSpec};

    fn spec(t: ThreeClusterSpec) -> ScenarioSpec {
        ScenarioSpec {
            kind: ScenarioKind::ThreeCluster,
            ptot_db: DbGrid::List(vec![-5.0, 15.0, 30.0]),
            three_cluster: t,
            ..ScenarioSpec::default()
        }
    }

    #[test]
    fn better_link_gets_more_training() {
        let rows = three_cluster_traces(&spec(ThreeClusterSpec::default())).unwrap();
        assert_eq!(rows.len(), 9);
        for p in rows.chunks(3) {
            if p.iter().all(|r| r.active) {
                assert!(
                    p[0].psi_db >= p[1].psi_db && p[1].psi_db >= p[2].psi_db,
                    "{p:?}"
                );
            }
        }
        let (mid, top) = (
            budget_spread(&rows, 15.0).unwrap(),
            budget_spread(&rows, 30.0).unwrap(),
        );
        assert!(top < 0.25 && top < mid / 5.0, "{mid} {top}");
    }

    #[test]
    fn equal_links_share_training_evenly() {
        let t = ThreeClusterSpec {
            gamma_o_db: vec![14.0, 8.0, 2.0],
            gamma_d_db: vec![5.0; 3],
            ..ThreeClusterSpec::default()
        };
        let rows = three_cluster_traces(&spec(t)).unwrap();
        for p in rows.chunks(3).filter(|p| p.iter().all(|r| r.active)) {
            assert!((p[0].psi_db - p[2].psi_db).abs() < 1e-9, "{p:?}");
        }
        assert!(budget_spread(&rows, 30.0).unwrap() > 0.5);
    }
}
