use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::inner::{
    fusion_weights_given_p, objective_direct, solve_sp21, sp21_kkt, ClusterStats, InnerKkt,
};
use super::training::{distribute_training, full_activation_threshold, training_residual};
use super::waterfill::{water_fill, water_fill_residual, WaterLevel};
use crate::error::{Error, Result};
use crate::estimator::mse_d;
use crate::model::{network_power, ChannelDraw, ChannelState, Network, PowerAllocation};
use crate::numerics::{golden_section_max, SearchSpec, DEFAULT_EPS};

/// Starting point of the block ascent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Init {
    /// `P_l = V_l / 2` with the matching optimal weights.
    Half,
    /// `P_l` uniform in `(0.05 V_l, 0.95 V_l)`, seeded.
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Relative stopping threshold of the outer loops.
    pub eps: f64,
    /// Stopping threshold of the block ascent when it runs inside the
    /// training-split search.
    pub nested_eps: f64,
    /// Relative bracket width for the single-cluster line search.
    pub inner_tol: f64,
    pub max_iter: usize,
    pub init: Init,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            nested_eps: 1e-6,
            inner_tol: 1e-6,
            max_iter: 1000,
            init: Init::Half,
        }
    }
}

impl SolverOptions {
    pub fn with_eps(eps: f64) -> Self {
        Self {
            eps,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Training split, sensor powers and fusion weights all optimized.
    Joint,
    /// Training power fixed as a share of the budget and split evenly.
    FixedTraining,
    /// One sensor power shared by every active cluster.
    CommonSensorPower,
    /// One head transmit power shared by every active cluster.
    CommonHeadPower,
    /// Perfect channel knowledge and no training.
    PerfectCsi,
    /// Error-free sensor-to-head links and no training.
    ErrorFreeLinks,
}

/// Normalized residuals of the optimality conditions at a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktResiduals {
    /// `|used - P_tot| / P_tot`.
    pub power: f64,
    /// Worst single-cluster residual over the active clusters.
    pub cluster: f64,
    /// Worst relative gap between the two budget-multiplier expressions.
    pub multiplier_gap: f64,
    /// Residual of the last cross-cluster budget split against the sensor
    /// powers it was computed for.
    pub water_fill: f64,
    /// Whether that split met the active-set ranking condition.
    pub water_fill_consistent: bool,
    /// Residual of the error-minimizing training split, when it applies.
    pub training: Option<f64>,
    /// Cross-cluster multiplier.
    pub lambda: f64,
    /// Training multiplier, when the error-minimizing split applies.
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub variant: Variant,
    pub p_tot: f64,
    pub alloc: PowerAllocation,
    /// Cluster budgets `P_l + wᵀRw`.
    pub cluster_powers: Vec<f64>,
    pub active: Vec<bool>,
    /// Sum of the cluster contributions to the posterior precision.
    pub objective: f64,
    pub mse: f64,
    /// Share of the budget left for the data phase.
    pub sigma: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub kkt: KktResiduals,
}

/// Result of the block ascent on fixed channel statistics.
#[derive(Debug, Clone)]
pub struct BlockAscent {
    pub p: Vec<f64>,
    pub w: Vec<DVector<f64>>,
    pub v: Vec<f64>,
    pub active: Vec<bool>,
    pub objective: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub lambda: f64,
    pub water_fill_residual: f64,
    pub water_fill_consistent: bool,
    pub inner_kkt: Vec<Option<InnerKkt>>,
}

/// Alternates the single-cluster solve over all active clusters with the
/// cross-cluster budget split until the relative objective change is at most
/// `eps`. Inactive clusters end with zero power and weights.
pub fn block_ascent(
    network: &Network,
    stats: &[ClusterStats],
    budget: f64,
    eps: f64,
    opts: &SolverOptions,
) -> Result<BlockAscent> {
    let n = network.num_clusters();
    if stats.len() != n {
        return Err(Error::Domain(format!(
            "expected statistics for {n} clusters"
        )));
    }
    if !(budget > 0.0) {
        return Err(Error::DegenerateBudget(format!(
            "data-phase budget {budget}"
        )));
    }
    let mut v = vec![budget / n as f64; n];
    let mut active = vec![true; n];
    let mut rng = match opts.init {
        Init::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Init::Half => None,
    };
    let mut p: Vec<f64> = v
        .iter()
        .map(|&vl| match rng.as_mut() {
            Some(r) => vl * r.random_range(0.05..0.95),
            None => 0.5 * vl,
        })
        .collect();
    let mut w: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut prev = 0.0;
    for (l, c) in network.clusters().enumerate() {
        let (wl, _) = fusion_weights_given_p(&c, stats[l], p[l], v[l])?;
        prev += objective_direct(&c, stats[l], p[l], &wl);
        w.push(wl);
    }
    let mut trace = vec![prev];
    let mut tau = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut lambda = 0.0;
    let mut wf_res = 0.0;
    let mut wf_consistent = true;
    let mut inner_kkt = vec![None; n];

    for iteration in 1..=opts.max_iter {
        let mut total = 0.0;
        for (l, c) in network.clusters().enumerate() {
            if !active[l] {
                continue;
            }
            let sol = solve_sp21(&c, stats[l], v[l], opts.inner_tol)?;
            inner_kkt[l] = Some(sp21_kkt(&c, stats[l], &sol));
            total += sol.f;
            p[l] = sol.p;
            tau[l] = sol.tau;
            beta[l] = sol.beta;
            w[l] = sol.w;
        }
        trace.push(total);
        if total < prev * (1.0 - 1e-9) {
            return Err(Error::NonMonotone {
                iteration,
                previous: prev,
                current: total,
            });
        }
        if iteration >= 2 && (total - prev).abs() <= eps * total.abs() {
            return Ok(BlockAscent {
                p,
                w,
                v,
                active,
                objective: total,
                trace,
                iterations: iteration,
                lambda,
                water_fill_residual: wf_res,
                water_fill_consistent: wf_consistent,
                inner_kkt,
            });
        }
        prev = total;

        let levels: Vec<WaterLevel> = (0..n)
            .map(|l| {
                let sv = network.config.clusters[l].sigma_v_sq.sqrt();
                let a = if active[l] {
                    stats[l].h_hat_sq.sqrt() / sv * (p[l] * tau[l]).sqrt()
                } else {
                    0.0
                };
                WaterLevel {
                    p: if active[l] { p[l] } else { 0.0 },
                    beta: if a > 0.0 { beta[l] } else { 0.0 },
                    a,
                }
            })
            .collect();
        let fill = water_fill(&levels, budget)?;
        wf_res = water_fill_residual(&levels, &fill, budget);
        lambda = fill.lambda;
        wf_consistent = fill.consistent;
        for l in 0..n {
            if !fill.active[l] {
                p[l] = 0.0;
                w[l].fill(0.0);
                inner_kkt[l] = None;
            }
        }
        v = fill.v;
        active = fill.active;
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        best_x: f64::NAN,
        best_f: prev,
    })
}

pub fn stats_of(channel: &ChannelState) -> Vec<ClusterStats> {
    (0..channel.num_clusters())
        .map(|l| ClusterStats {
            h_hat_sq: channel.h_hat_sq(l),
            zeta_sq: channel.zeta_sq[l],
        })
        .collect()
}

pub(crate) fn check_budget(p_tot: f64, p_trn: f64) -> Result<()> {
    if !(p_tot > 0.0 && p_tot.is_finite()) {
        return Err(Error::DegenerateBudget(format!("total power {p_tot}")));
    }
    if !(p_trn >= 0.0 && p_trn < p_tot) {
        return Err(Error::DegenerateBudget(format!(
            "training power {p_trn} with total {p_tot}"
        )));
    }
    Ok(())
}

pub(crate) fn assemble(
    network: &Network,
    variant: Variant,
    p_tot: f64,
    psi: &[f64],
    channel: &ChannelState,
    run: BlockAscent,
) -> Result<SolveReport> {
    let p_trn: f64 = psi.iter().sum();
    let alloc = PowerAllocation {
        p_trn,
        psi: psi.to_vec(),
        p: run.p.clone(),
        w: run.w.iter().map(|w| w.iter().copied().collect()).collect(),
    };
    let (cluster, gap) = run
        .inner_kkt
        .iter()
        .flatten()
        .fold((0.0f64, 0.0f64), |(a, b), k| {
            (
                a.max(k.stationarity_w).max(k.stationarity_p).max(k.budget),
                b.max(k.multiplier_gap),
            )
        });
    let kkt = KktResiduals {
        power: (network_power(network, &alloc) - p_tot).abs() / p_tot,
        cluster,
        multiplier_gap: gap,
        water_fill: run.water_fill_residual,
        water_fill_consistent: run.water_fill_consistent,
        training: None,
        lambda: run.lambda,
        kappa: None,
    };
    Ok(SolveReport {
        variant,
        p_tot,
        cluster_powers: alloc.cluster_powers(network),
        mse: mse_d(network, &alloc, channel)?,
        alloc,
        active: run.active,
        objective: run.objective,
        sigma: 1.0 - p_trn / p_tot,
        iterations: run.iterations,
        trace: run.trace,
        kkt,
    })
}

/// Block ascent for a training split that has already been applied to the
/// channel estimates in `channel`.
pub fn solve_given_training(
    network: &Network,
    channel: &ChannelState,
    psi: &[f64],
    p_tot: f64,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let p_trn: f64 = psi.iter().sum();
    check_budget(p_tot, p_trn)?;
    let run = block_ascent(network, &stats_of(channel), p_tot - p_trn, opts.eps, opts)?;
    assemble(network, Variant::Joint, p_tot, psi, channel, run)
}

/// Outcome of the search over the data-phase share `σ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingSplit {
    pub sigma: f64,
    pub p_trn: f64,
    pub psi: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Golden-section search over `σ ∈ (0, 1)` of `value(stats, σ P_tot)`, where
/// `stats` replaces `|h_hat|²` by its mean under the training split
/// `distribute_training((1 - σ) P_tot)`.
pub fn search_training_split<F>(
    network: &Network,
    p_tot: f64,
    eps: f64,
    mut value: F,
) -> Result<TrainingSplit>
where
    F: FnMut(&[ClusterStats], f64) -> Result<f64>,
{
    if !(p_tot > 0.0 && p_tot.is_finite()) {
        return Err(Error::DegenerateBudget(format!("total power {p_tot}")));
    }
    let mut failure = None;
    let mut eval = |sigma: f64| -> f64 {
        let psi = distribute_training(network, (1.0 - sigma) * p_tot);
        let stats =
            stats_of(&ChannelState::surrogate(network, &psi).expect("psi sized to network"));
        match value(&stats, sigma * p_tot) {
            Ok(v) => v,
            Err(Error::DegenerateBudget(_)) => 0.0,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let g = golden_section_max(&mut eval, &SearchSpec::new(0.0, 1.0, eps));
    if let Some(e) = failure {
        return Err(e);
    }
    let g = g?;
    let p_trn = (1.0 - g.x) * p_tot;
    Ok(TrainingSplit {
        sigma: g.x,
        p_trn,
        psi: distribute_training(network, p_trn),
        objective: g.f,
        iterations: g.iterations,
    })
}

/// Training split that maximizes the block-ascent objective under
/// mean channel statistics.
pub fn optimize_training(
    network: &Network,
    p_tot: f64,
    opts: &SolverOptions,
) -> Result<TrainingSplit> {
    search_training_split(network, p_tot, opts.eps, |stats, budget| {
        Ok(block_ascent(network, stats, budget, opts.nested_eps, opts)?.objective)
    })
}

/// Adds the training-split residuals to a report.
pub(crate) fn with_training_kkt(network: &Network, mut report: SolveReport) -> SolveReport {
    let p_trn = report.alloc.p_trn;
    if p_trn > 0.0 && p_trn >= full_activation_threshold(network) {
        report.kkt.training = Some(training_residual(network, &report.alloc.psi, p_trn));
        report.kkt.kappa = Some(super::training::training_multiplier(network, p_trn));
    }
    report
}

/// Jointly optimized training split, sensor powers and fusion weights for one
/// channel realization.
pub fn solve_joint(
    network: &Network,
    draw: &ChannelDraw,
    p_tot: f64,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let split = optimize_training(network, p_tot, opts)?;
    solve_joint_with_split(network, draw, p_tot, &split, opts)
}

/// As [`solve_joint`] with a precomputed training split, so one split can be
/// reused across channel realizations.
pub fn solve_joint_with_split(
    network: &Network,
    draw: &ChannelDraw,
    p_tot: f64,
    split: &TrainingSplit,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let channel = ChannelState::from_draw(network, &split.psi, draw)?;
    let report = solve_given_training(network, &channel, &split.psi, p_tot, opts)?;
    Ok(with_training_kkt(network, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{random_network, scenario_rng, RandomSpec};
    use crate::model::{network_power, ClusterSpec, NetworkConfig};
    use num_complex::Complex64;

    fn symmetric() -> Network {
        let c = ClusterSpec::diagonal(&[0.4, 0.6], &[0.3, 0.2], 0.8, 0.5);
        Network::new(NetworkConfig {
            sigma_theta_sq: 1.0,
            clusters: vec![c.clone(), c.clone(), c],
        })
        .unwrap()
    }

    fn random(seed: u64) -> Network {
        let spec = RandomSpec {
            clusters: 4,
            max_sensors: 4,
            ..RandomSpec::default()
        };
        random_network(&spec, 1.0, &mut scenario_rng(seed, 0)).unwrap()
    }

    #[test]
    fn symmetric_clusters_share_equally() {
        let net = symmetric();
        let stats = vec![
            ClusterStats {
                h_hat_sq: 1.2,
                zeta_sq: 0.2
            };
            3
        ];
        let run = block_ascent(&net, &stats, 6.0, 1e-9, &SolverOptions::default()).unwrap();
        for l in 1..3 {
            assert!((run.p[l] - run.p[0]).abs() < 1e-6 * run.p[0]);
            assert!((run.v[l] - run.v[0]).abs() < 1e-6 * run.v[0]);
        }
        assert!(run.active.iter().all(|&a| a));
    }

    #[test]
    fn trace_is_monotone_and_budget_is_met() {
        let net = random(3);
        let mut rng = scenario_rng(3, 1);
        let draw = ChannelDraw::sample(&net, &mut rng);
        let r = solve_joint(&net, &draw, 5.0, &SolverOptions::default()).unwrap();
        assert!(r
            .trace
            .windows(2)
            .all(|w| w[1] >= w[0] - 1e-12 * w[0].abs()));
        let used = network_power(&net, &r.alloc);
        assert!((used - 5.0).abs() < 1e-6 * 5.0, "used {used}");
        assert!(r.kkt.power < 1e-6);
        assert!(r.mse > 0.0 && r.mse < 1.0);
    }

    #[test]
    fn random_starts_reach_the_same_objective() {
        let net = random(8);
        let stats: Vec<ClusterStats> = net
            .config
            .clusters
            .iter()
            .map(|c| ClusterStats {
                h_hat_sq: 1.5 * c.sigma_h_sq,
                zeta_sq: 0.4 * c.sigma_h_sq,
            })
            .collect();
        let base = block_ascent(&net, &stats, 4.0, 1e-9, &SolverOptions::default()).unwrap();
        for seed in 1..4 {
            let opts = SolverOptions {
                init: Init::Random(seed),
                ..SolverOptions::default()
            };
            let run = block_ascent(&net, &stats, 4.0, 1e-9, &opts).unwrap();
            assert!(
                ((run.objective - base.objective) / base.objective).abs() < 1e-5,
                "seed {seed}: {} vs {}",
                run.objective,
                base.objective
            );
        }
    }

    #[test]
    fn perfect_channel_limit_of_joint_solution() {
        // With no estimation error and no training, the given-training solve
        // is the perfect-channel variant.
        let net = symmetric();
        let h = vec![
            Complex64::new(0.9, 0.1),
            Complex64::new(0.3, -0.5),
            Complex64::new(1.1, 0.4),
        ];
        let channel = ChannelState::perfect(&h);
        let a = solve_given_training(&net, &channel, &[0.0; 3], 4.0, &SolverOptions::default())
            .unwrap();
        let b =
            crate::optimizer::solve_perfect_csi(&net, &h, 4.0, &SolverOptions::default()).unwrap();
        assert!(((a.mse - b.mse) / b.mse).abs() < 1e-9);
    }

    #[test]
    fn rejects_degenerate_budget() {
        let net = symmetric();
        let draw = ChannelDraw::sample(&net, &mut scenario_rng(1, 1));
        assert!(matches!(
            solve_joint(&net, &draw, 0.0, &SolverOptions::default()),
            Err(Error::DegenerateBudget(_))
        ));
    }
}
