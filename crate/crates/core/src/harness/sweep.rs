//! Monte Carlo sweep of the MSE and its bounds over the budget grid.

use rand::Rng;
use serde::Serialize;

use super::scenario::{scenario_rng, CrbMode, ScenarioSpec};
use crate::crb::{bayesian_crb, monte_carlo_crb, MixtureRule};
use crate::error::{Error, Result};
use crate::estimator::mse_d3;
use crate::model::{ChannelDraw, ChannelState, Network};
use crate::optimizer::{
    optimize_training, solve_error_free_links, solve_joint_with_split, solve_perfect_csi,
    SolveReport, SolverOptions, TrainingSplit,
};

/// Largest tolerated share of failed trials at one grid point.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// Pairwise summation, accurate to `O(log n)` roundings.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and standard error of the mean.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(x) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = x.iter().map(|v| (v - mean).powi(2)).collect();
    (
        mean,
        (pairwise_sum(&dev) / (n - 1) as f64 / n as f64).sqrt(),
    )
}

fn median(mut x: Vec<usize>) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.sort_unstable();
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2] as f64
    } else {
        0.5 * (x[n / 2 - 1] + x[n / 2]) as f64
    }
}

pub(crate) fn solver_options(spec: &ScenarioSpec) -> SolverOptions {
    SolverOptions::with_eps(spec.eps)
}

/// Draws trial `t` and returns the draw with the generator positioned after it.
pub(crate) fn trial_draw(network: &Network, seed: u64, trial: usize) -> (ChannelDraw, impl Rng) {
    let mut rng = scenario_rng(seed, trial as u64 + 1);
    let draw = ChannelDraw::sample(network, &mut rng);
    (draw, rng)
}

/// The bound `G⁻¹` for a solved trial, or `None` when disabled.
pub(crate) fn trial_crb<R: Rng>(
    spec: &ScenarioSpec,
    network: &Network,
    report: &SolveReport,
    draw: &ChannelDraw,
    mode: CrbMode,
    rng: &mut R,
) -> Result<Option<f64>> {
    if mode == CrbMode::None {
        return Ok(None);
    }
    let channel = ChannelState::from_draw(network, &report.alloc.psi, draw)?;
    let g = match mode {
        CrbMode::None => unreachable!(),
        CrbMode::MonteCarlo => {
            monte_carlo_crb(
                network,
                &report.alloc,
                &channel,
                spec.data_noise,
                spec.crb_model,
                spec.crb_samples,
                &MixtureRule::new(spec.crb_rule_nodes),
                rng,
            )?
            .0
        }
        CrbMode::Series => bayesian_crb(
            network,
            &report.alloc,
            &channel,
            spec.data_noise,
            &spec.crb_series,
        )?,
    };
    Ok(Some(g))
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub ptot_db: f64,
    pub d: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub se_d: f64,
    pub se_d1: f64,
    pub se_d2: f64,
    pub crb: Option<f64>,
    pub se_crb: Option<f64>,
    pub trials: usize,
    pub failures: usize,
    /// Trials breaking `D3 < D2 < D1 < D < σθ²`.
    pub violations: usize,
    /// Trials whose bound left `(D3, D)`.
    pub bound_violations: usize,
    pub median_iterations: f64,
    pub split_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn violations(&self) -> usize {
        self.rows.iter().map(|r| r.violations).sum()
    }

    pub fn bound_violations(&self) -> usize {
        self.rows.iter().map(|r| r.bound_violations).sum()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().map(|r| r.failures).sum()
    }
}

struct Trial {
    d: f64,
    d1: f64,
    d2: f64,
    crb: Option<f64>,
    iterations: usize,
}

fn run_trial(
    spec: &ScenarioSpec,
    network: &Network,
    split: &TrainingSplit,
    p_tot: f64,
    trial: usize,
    opts: &SolverOptions,
) -> Result<Trial> {
    let (draw, mut rng) = trial_draw(network, spec.seed, trial);
    let joint = solve_joint_with_split(network, &draw, p_tot, split, opts)?;
    let d1 = solve_perfect_csi(network, &draw.h, p_tot, opts)?.mse;
    let d2 = solve_error_free_links(network, &draw.h, p_tot)?.mse;
    let crb = trial_crb(spec, network, &joint, &draw, spec.crb, &mut rng)?;
    Ok(Trial {
        d: joint.mse,
        d1,
        d2,
        crb,
        iterations: joint.iterations,
    })
}

/// Runs every solver needed for the bound curves at each budget.
///
/// Every grid point reuses the same channel draws (trial `t` always uses
/// stream `t + 1`), so the curves differ only through the budget.
pub fn run_sweep(spec: &ScenarioSpec) -> Result<SweepTable> {
    spec.validate()?;
    let network = spec.network()?;
    let opts = solver_options(spec);
    let st = network.sigma_theta_sq();
    let d3 = mse_d3(&network);
    let mut rows = Vec::new();
    for (db, p_tot) in spec.grid() {
        let split = optimize_training(&network, p_tot, &opts)?;
        let mut trials = Vec::with_capacity(spec.trials);
        let mut failures = 0;
        let (mut violations, mut bound_violations) = (0, 0);
        for t in 0..spec.trials {
            match run_trial(spec, &network, &split, p_tot, t, &opts) {
                Ok(x) => {
                    if !(d3 < x.d2 && x.d2 < x.d1 && x.d1 < x.d && x.d < st) {
                        violations += 1;
                    }
                    if !x.crb.is_none_or(|g| d3 < g && g < x.d) {
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
        let col = |f: fn(&Trial) -> f64| mean_se(&trials.iter().map(f).collect::<Vec<_>>());
        let (d, se_d) = col(|x| x.d);
        let (d1, se_d1) = col(|x| x.d1);
        let (d2, se_d2) = col(|x| x.d2);
        let (crb, se_crb) = if spec.crb == CrbMode::None {
            (None, None)
        } else {
            let (m, s) = col(|x| x.crb.unwrap_or(f64::NAN));
            (Some(m), Some(s))
        };
        rows.push(SweepRow {
            ptot_db: db,
            d,
            d1,
            d2,
            d3,
            se_d,
            se_d1,
            se_d2,
            crb,
            se_crb,
            trials: trials.len(),
            failures,
            violations,
            bound_violations,
            median_iterations: median(trials.iter().map(|x| x.iterations).collect()),
            split_iterations: split.iterations,
        });
    }
    Ok(SweepTable { rows })
}

/// Trial-mean `G⁻¹` at the joint allocation for each budget, with its
/// standard error over trials. Uses the evaluator in `spec.crb`, defaulting to
/// simulation when it is `None`.
pub fn run_crb(spec: &ScenarioSpec) -> Result<Vec<(f64, f64, f64)>> {
    spec.validate()?;
    let network = spec.network()?;
    let opts = solver_options(spec);
    let mode = match spec.crb {
        CrbMode::None => CrbMode::MonteCarlo,
        m => m,
    };
    let mut out = Vec::new();
    for (db, p_tot) in spec.grid() {
        let split = optimize_training(&network, p_tot, &opts)?;
        let mut g = Vec::with_capacity(spec.trials);
        for t in 0..spec.trials {
            let (draw, mut rng) = trial_draw(&network, spec.seed, t);
            let joint = solve_joint_with_split(&network, &draw, p_tot, &split, &opts)?;
            if let Some(x) = trial_crb(spec, &network, &joint, &draw, mode, &mut rng)? {
                g.push(x);
            }
        }
        let (m, se) = mean_se(&g);
        out.push((db, m, se));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{DbGrid, RandomSpec};

    fn small() -> ScenarioSpec {
        ScenarioSpec {
            trials: 6,
            ptot_db: DbGrid::List(vec![-4.0, 6.0, 16.0]),
            random: RandomSpec {
                clusters: 3,
                max_sensors: 3,
                ..RandomSpec::default()
            },
            ..ScenarioSpec::default()
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let x: Vec<f64> = (1..=100).map(|i| i as f64 * 0.1).collect();
        assert!((pairwise_sum(&x) - 505.0).abs() < 1e-10);
        let (m, se) = mean_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_orders_the_bounds() {
        let t = run_sweep(&small()).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.violations(), 0);
        for w in t.rows.windows(2) {
            assert!(w[1].d <= w[0].d && w[1].d1 <= w[0].d1 && w[1].d2 <= w[0].d2);
            assert_eq!(w[1].d3, w[0].d3);
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let a = run_sweep(&small()).unwrap();
        let b = run_sweep(&small()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monte_carlo_bound_sits_inside_the_chain() {
        let spec = ScenarioSpec {
            trials: 2,
            crb: CrbMode::MonteCarlo,
            crb_samples: 100,
            ptot_db: DbGrid::List(vec![5.0]),
            ..small()
        };
        let t = run_sweep(&spec).unwrap();
        let r = &t.rows[0];
        let g = r.crb.unwrap();
        assert!(r.d3 < g && g < r.d, "{} < {g} < {}", r.d3, r.d);
        assert_eq!(t.violations(), 0);
    }
}
