//! Gap factors: what each restriction of the joint allocation costs,
//! measured against the room left between the prior variance and the bound.

use serde::Serialize;

use super::scenario::{CrbMode, ScenarioSpec};
use super::sweep::{mean_se, solver_options, trial_crb, trial_draw, MAX_FAILURE_RATE};
use crate::error::{Error, Result};
use crate::model::Network;
use crate::optimizer::{
    common_head_power_split, common_sensor_power_split, optimize_training,
    solve_common_head_power_with_split, solve_common_sensor_power_with_split, solve_fixed_training,
    solve_joint_with_split, SolverOptions, TrainingSplit,
};

/// `g_x = (D_x − D) / (σθ² − G⁻¹)` for the fixed-training, common-sensor-power
/// and common-head-power restrictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapFactors {
    pub g_t: f64,
    pub g_c: f64,
    pub g_d: f64,
}

fn gap(d: f64, dx: f64, room: f64, name: &str) -> Result<f64> {
    if dx < d {
        return Err(Error::Domain(format!(
            "{name} = {dx} is below the joint MSE {d}"
        )));
    }
    Ok((dx - d) / room)
}

pub fn gap_factors(
    d: f64,
    d_t: f64,
    d_c: f64,
    d_d: f64,
    crb: f64,
    sigma_theta_sq: f64,
) -> Result<GapFactors> {
    if !(sigma_theta_sq > crb && crb > 0.0) {
        return Err(Error::Domain(format!(
            "need 0 < G⁻¹ < σθ², got G⁻¹ = {crb}, σθ² = {sigma_theta_sq}"
        )));
    }
    for x in [d, d_t, d_c, d_d] {
        if !(x > 0.0 && x <= sigma_theta_sq) {
            return Err(Error::Domain(format!("MSE {x} outside (0, σθ²]")));
        }
    }
    let room = sigma_theta_sq - crb;
    Ok(GapFactors {
        g_t: gap(d, d_t, room, "D_t")?,
        g_c: gap(d, d_c, room, "D_c")?,
        g_d: gap(d, d_d, room, "D_d")?,
    })
}

/// Trial-mean gap factors at one budget. `g_t` has one entry per training
/// share of the scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub ptot_db: f64,
    pub g_t: Vec<f64>,
    pub g_c: f64,
    pub g_d: f64,
    pub d: f64,
    pub d_t: Vec<f64>,
    pub d_c: f64,
    pub d_d: f64,
    pub crb: f64,
    pub se_crb: f64,
    pub trials: usize,
    pub failures: usize,
    /// Trials where a restricted MSE fell below the joint one.
    pub violations: usize,
    /// Trials whose bound left `(D3, D)`.
    pub bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapTable {
    pub training_fractions: Vec<f64>,
    pub rows: Vec<GapRow>,
}

impl GapTable {
    pub fn violations(&self) -> usize {
        self.rows.iter().map(|r| r.violations).sum()
    }

    pub fn bound_violations(&self) -> usize {
        self.rows.iter().map(|r| r.bound_violations).sum()
    }
}

struct Splits {
    joint: TrainingSplit,
    sensor: TrainingSplit,
    head: TrainingSplit,
}

struct GapTrial {
    d: f64,
    d_t: Vec<f64>,
    d_c: f64,
    d_d: f64,
    crb: f64,
}

fn gap_trial(
    spec: &ScenarioSpec,
    network: &Network,
    splits: &Splits,
    p_tot: f64,
    trial: usize,
    opts: &SolverOptions,
) -> Result<GapTrial> {
    let (draw, mut rng) = trial_draw(network, spec.seed, trial);
    let joint = solve_joint_with_split(network, &draw, p_tot, &splits.joint, opts)?;
    let d_t = spec
        .training_fractions
        .iter()
        .map(|&f| Ok(solve_fixed_training(network, &draw, p_tot, f, opts)?.mse))
        .collect::<Result<Vec<_>>>()?;
    let d_c =
        solve_common_sensor_power_with_split(network, &draw, p_tot, &splits.sensor, opts)?.mse;
    let d_d = solve_common_head_power_with_split(network, &draw, p_tot, &splits.head, opts)?.mse;
    let mode = match spec.crb {
        CrbMode::None => CrbMode::MonteCarlo,
        m => m,
    };
    let crb = trial_crb(spec, network, &joint, &draw, mode, &mut rng)?.unwrap_or(f64::NAN);
    Ok(GapTrial {
        d: joint.mse,
        d_t,
        d_c,
        d_d,
        crb,
    })
}

/// Sweeps the budget grid and reports trial-mean gap factors.
///
/// The bound is always evaluated (by simulation unless the scenario asks for
/// the series). Factors use the trial means of each MSE and of `G⁻¹`.
pub fn run_gaps(spec: &ScenarioSpec) -> Result<GapTable> {
    spec.validate()?;
    let network = spec.network()?;
    let opts = solver_options(spec);
    let st = network.sigma_theta_sq();
    let d3 = crate::estimator::mse_d3(&network);
    let nf = spec.training_fractions.len();
    let mut rows = Vec::new();
    for (db, p_tot) in spec.grid() {
        let splits = Splits {
            joint: optimize_training(&network, p_tot, &opts)?,
            sensor: common_sensor_power_split(&network, p_tot, &opts)?,
            head: common_head_power_split(&network, p_tot, &opts)?,
        };
        let mut trials = Vec::with_capacity(spec.trials);
        let (mut failures, mut violations, mut bound_violations) = (0, 0, 0);
        for t in 0..spec.trials {
            match gap_trial(spec, &network, &splits, p_tot, t, &opts) {
                Ok(x) => {
                    let restricted = x.d_t.iter().chain([&x.d_c, &x.d_d]).all(|&dx| dx >= x.d);
                    if !(restricted && x.d < st) {
                        violations += 1;
                    }
                    if !(d3 < x.crb && x.crb < x.d) {
                        bound_violations += 1;
                    }
                    trials.push(x);
                }
                Err(_) => failures += 1,
            }
        }
        if failures as f64 > MAX_FAILURE_RATE * spec.trials as f64 {
            return Err(Error::Solver(format!(
                "{failures} of {} trials failed at {db} dB",
                spec.trials
            )));
        }
        let mean =
            |f: &dyn Fn(&GapTrial) -> f64| mean_se(&trials.iter().map(f).collect::<Vec<_>>());
        let d = mean(&|x| x.d).0;
        let d_t: Vec<f64> = (0..nf).map(|i| mean(&|x| x.d_t[i]).0).collect();
        let d_c = mean(&|x| x.d_c).0;
        let d_d = mean(&|x| x.d_d).0;
        let (crb, se_crb) = mean(&|x| x.crb);
        let room = st - crb;
        rows.push(GapRow {
            ptot_db: db,
            g_t: d_t.iter().map(|dt| (dt - d) / room).collect(),
            g_c: (d_c - d) / room,
            g_d: (d_d - d) / room,
            d,
            d_t,
            d_c,
            d_d,
            crb,
            se_crb,
            trials: trials.len(),
            failures,
            violations,
            bound_violations,
        });
    }
    Ok(GapTable {
        training_fractions: spec.training_fractions.clone(),
        rows,
    })
}
