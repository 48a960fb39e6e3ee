//! Restricted allocations used to measure what each degree of freedom of the
//! joint solution is worth.

use nalgebra::DVector;

use super::inner::{beta, fusion_weights_given_p, ClusterStats};
use super::joint::{
    assemble, check_budget, search_training_split, solve_given_training, stats_of,
    with_training_kkt, BlockAscent, SolveReport, SolverOptions, TrainingSplit, Variant,
};
use super::waterfill::{water_fill, water_fill_residual, WaterLevel};
use crate::error::{Error, Result};
use crate::model::{ChannelDraw, ChannelState, ClusterView, Network};
use crate::numerics::{golden_section_max, projected_gradient_ascent, AscentSpec, SearchSpec};

/// Training power fixed at `fraction · P_tot` and split evenly over clusters.
pub fn solve_fixed_training(
    network: &Network,
    draw: &ChannelDraw,
    p_tot: f64,
    fraction: f64,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::DegenerateBudget(format!(
            "training fraction {fraction}"
        )));
    }
    let n = network.num_clusters();
    let psi = vec![fraction * p_tot / n as f64; n];
    let channel = ChannelState::from_draw(network, &psi, draw)?;
    let mut report = solve_given_training(network, &channel, &psi, p_tot, opts)?;
    report.variant = Variant::FixedTraining;
    Ok(report)
}

/// Allocation for a fixed common sensor power.
#[derive(Debug, Clone)]
pub struct CommonAllocation {
    pub p: Vec<f64>,
    pub w: Vec<DVector<f64>>,
    pub v: Vec<f64>,
    pub active: Vec<bool>,
    pub objective: f64,
    pub lambda: f64,
    pub water_fill_residual: f64,
    pub water_fill_consistent: bool,
}

impl CommonAllocation {
    fn empty(n: usize, k: &[usize]) -> Self {
        Self {
            p: vec![0.0; n],
            w: k.iter().map(|&k| DVector::zeros(k)).collect(),
            v: vec![0.0; n],
            active: vec![false; n],
            objective: 0.0,
            lambda: 0.0,
            water_fill_residual: 0.0,
            water_fill_consistent: true,
        }
    }

    fn into_block(self, trace: Vec<f64>, iterations: usize) -> BlockAscent {
        BlockAscent {
            p: self.p,
            w: self.w,
            v: self.v,
            active: self.active,
            objective: self.objective,
            trace,
            iterations,
            lambda: self.lambda,
            water_fill_residual: self.water_fill_residual,
            water_fill_consistent: self.water_fill_consistent,
            inner_kkt: Vec::new(),
        }
    }
}

/// Every cluster uses sensor power `p_common`; the cluster budgets come from
/// the water-filling split and the weights from the closed form. Returns an
/// empty allocation when no cluster can be activated.
pub fn common_sensor_power_at(
    network: &Network,
    stats: &[ClusterStats],
    budget: f64,
    p_common: f64,
) -> Result<CommonAllocation> {
    let n = network.num_clusters();
    let mut out = CommonAllocation::empty(n, &network.config.sensors());
    if !(p_common > 0.0) {
        return Ok(out);
    }
    let levels: Vec<WaterLevel> = network
        .clusters()
        .zip(stats)
        .map(|(c, &s)| {
            let tau = c.solve_rt(p_common).tau;
            let a = s.h_hat_sq.sqrt() / c.spec.sigma_v_sq.sqrt() * (p_common * tau).sqrt();
            WaterLevel {
                p: p_common,
                beta: if a > 0.0 {
                    beta(&c, s, p_common, tau)
                } else {
                    0.0
                },
                a,
            }
        })
        .collect();
    let fill = match water_fill(&levels, budget) {
        Ok(f) => f,
        Err(Error::DegenerateBudget(_)) => return Ok(out),
        Err(e) => return Err(e),
    };
    out.water_fill_residual = water_fill_residual(&levels, &fill, budget);
    out.lambda = fill.lambda;
    out.water_fill_consistent = fill.consistent;
    for (l, c) in network.clusters().enumerate() {
        if fill.active[l] {
            let (w, f) = fusion_weights_given_p(&c, stats[l], p_common, fill.v[l])?;
            out.p[l] = p_common;
            out.w[l] = w;
            out.objective += f;
        }
    }
    out.v = fill.v;
    out.active = fill.active;
    Ok(out)
}

/// Golden-section search over the common sensor power `(1 - σ_c) budget / L`.
pub fn solve_common_sensor_power_inner(
    network: &Network,
    stats: &[ClusterStats],
    budget: f64,
    eps: f64,
) -> Result<(CommonAllocation, Vec<f64>, usize)> {
    let n = network.num_clusters() as f64;
    let mut best = f64::NEG_INFINITY;
    let mut trace = Vec::new();
    let mut failure = None;
    let g = golden_section_max(
        |sc| match common_sensor_power_at(network, stats, budget, (1.0 - sc) * budget / n) {
            Ok(a) => {
                best = best.max(a.objective);
                trace.push(best);
                a.objective
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        &SearchSpec::new(0.0, 1.0, eps),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let g = g?;
    let alloc = common_sensor_power_at(network, stats, budget, (1.0 - g.x) * budget / n)?;
    Ok((alloc, trace, g.iterations))
}

/// One sensor power shared by all active clusters, with the training split
/// chosen under mean channel statistics.
pub fn solve_common_sensor_power(
    network: &Network,
    draw: &ChannelDraw,
    p_tot: f64,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let split = common_sensor_power_split(network, p_tot, opts)?;
    solve_common_sensor_power_with_split(network, draw, p_tot, &split, opts)
}

/// Training split for the common-sensor-power restriction under mean channel
/// statistics.
pub fn common_sensor_power_split(
    network: &Network,
    p_tot: f64,
    opts: &SolverOptions,
) -> Result<TrainingSplit> {
    search_training_split(network, p_tot, opts.eps, |stats, budget| {
        Ok(
            solve_common_sensor_power_inner(network, stats, budget, opts.nested_eps)?
                .0
                .objective,
        )
    })
}

/// As [`solve_common_sensor_power`] with a precomputed training split.
pub fn solve_common_sensor_power_with_split(
    network: &Network,
    draw: &ChannelDraw,
    p_tot: f64,
    split: &TrainingSplit,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    check_budget(p_tot, split.p_trn)?;
    let channel = ChannelState::from_draw(network, &split.psi, draw)?;
    let budget = p_tot - split.p_trn;
    let (alloc, trace, iterations) =
        solve_common_sensor_power_inner(network, &stats_of(&channel), budget, opts.eps)?;
    if alloc.objective == 0.0 {
        return Err(Error::DegenerateBudget(
            "no cluster can be activated".into(),
        ));
    }
    let report = assemble(
        network,
        Variant::CommonSensorPower,
        p_tot,
        &split.psi,
        &channel,
        alloc.into_block(trace, iterations),
    )?;
    Ok(with_training_kkt(network, report))
}

/// Cluster objective when the head spends `head` and the sensors `p`:
/// `P m / (1 + b + b σθ² P m)` with `b = (σv²/head + ζ²)/|h_hat|²`.
pub fn common_head_objective(view: &ClusterView, stats: ClusterStats, p: f64, head: f64) -> f64 {
    if !(p > 0.0) || stats.h_hat_sq == 0.0 {
        return 0.0;
    }
    let m = view.solve_rt(p).m;
    let b = (view.spec.sigma_v_sq / head + stats.zeta_sq) / stats.h_hat_sq;
    p * m / (1.0 + b + b * view.sigma_theta_sq * p * m)
}

/// Derivative of [`common_head_objective`] with respect to `p`.
pub fn common_head_gradient(view: &ClusterView, stats: ClusterStats, p: f64, head: f64) -> f64 {
    if stats.h_hat_sq == 0.0 {
        return 0.0;
    }
    let s = view.solve_rt(p);
    let dm = -view.quad(&view.derived.delta, &s.v);
    let b = (view.spec.sigma_v_sq / head + stats.zeta_sq) / stats.h_hat_sq;
    let den = 1.0 + b + b * view.sigma_theta_sq * p * s.m;
    (s.m + p * dm) * (1.0 + b) / (den * den)
}

/// Sensor powers for a fixed common head power, by projected gradient ascent
/// on `Σ P_l = budget − L·head`. Every head spends `head`; one whose sensors
/// end with no power forwards its link noise, which carries nothing about `θ`.
pub fn common_head_power_at(
    network: &Network,
    stats: &[ClusterStats],
    budget: f64,
    head: f64,
) -> Result<CommonAllocation> {
    common_head_power_from(network, stats, budget, head, None)
}

/// As [`common_head_power_at`], starting the ascent from the sensor powers
/// `start` rescaled to the available room.
fn common_head_power_from(
    network: &Network,
    stats: &[ClusterStats],
    budget: f64,
    head: f64,
    start: Option<&[f64]>,
) -> Result<CommonAllocation> {
    let n = network.num_clusters();
    let mut out = CommonAllocation::empty(n, &network.config.sensors());
    let room = budget - n as f64 * head;
    if !(head > 0.0 && room > 0.0) {
        return Ok(out);
    }
    let f = |p: &[f64]| -> f64 {
        p.iter()
            .enumerate()
            .map(|(l, &pl)| common_head_objective(&network.cluster(l), stats[l], pl, head))
            .sum()
    };
    let g = |p: &[f64]| -> Vec<f64> {
        p.iter()
            .enumerate()
            .map(|(l, &pl)| common_head_gradient(&network.cluster(l), stats[l], pl, head))
            .collect()
    };
    let total: f64 = start.map_or(0.0, |p| p.iter().sum());
    let x0 = match start {
        Some(p) if total > 0.0 => p.iter().map(|v| v * room / total).collect(),
        _ => vec![room / n as f64; n],
    };
    let scale: f64 = g(&x0).iter().map(|v| v * v).sum::<f64>().sqrt();
    let x =
        projected_gradient_ascent(f, g, &x0, &AscentSpec::new(room, 1e-9 * scale.max(1e-300)))?.x;
    for (l, &pl) in x.iter().enumerate() {
        let c = network.cluster(l);
        out.p[l] = pl;
        out.v[l] = pl + head;
        if pl > 0.0 && stats[l].h_hat_sq > 0.0 {
            let s = c.solve_rt(pl);
            out.w[l] = &s.u * (head / s.tau).sqrt();
            out.active[l] = true;
            out.objective += common_head_objective(&c, stats[l], pl, head);
        } else {
            let e = DVector::from_element(c.sensors(), 1.0);
            let q = c.ch_transmit_power(0.0, &e);
            if q > 0.0 {
                out.w[l] = e * (head / q).sqrt();
            }
        }
    }
    Ok(out)
}

/// Golden-section search over the common head power `(1 - σ_d) budget / L`.
pub fn solve_common_head_power_inner(
    network: &Network,
    stats: &[ClusterStats],
    budget: f64,
    eps: f64,
) -> Result<(CommonAllocation, Vec<f64>, usize)> {
    let n = network.num_clusters() as f64;
    let mut best = f64::NEG_INFINITY;
    let mut trace = Vec::new();
    let mut failure = None;
    let mut last: Option<Vec<f64>> = None;
    let g = golden_section_max(
        |sd| match common_head_power_from(
            network,
            stats,
            budget,
            (1.0 - sd) * budget / n,
            last.as_deref(),
        ) {
            Ok(a) => {
                best = best.max(a.objective);
                trace.push(best);
                last = Some(a.p.clone());
                a.objective
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        &SearchSpec::new(0.0, 1.0, eps),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let g = g?;
    let alloc = common_head_power_at(network, stats, budget, (1.0 - g.x) * budget / n)?;
    Ok((alloc, trace, g.iterations))
}

/// One head transmit power shared by all active clusters, with the training
/// split chosen under mean channel statistics.
pub fn solve_common_head_power(
    network: &Network,
    draw: &ChannelDraw,
    p_tot: f64,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let split = common_head_power_split(network, p_tot, opts)?;
    solve_common_head_power_with_split(network, draw, p_tot, &split, opts)
}

/// Training split for the common-head-power restriction under mean channel
/// statistics.
pub fn common_head_power_split(
    network: &Network,
    p_tot: f64,
    opts: &SolverOptions,
) -> Result<TrainingSplit> {
    search_training_split(network, p_tot, opts.eps, |stats, budget| {
        Ok(
            solve_common_head_power_inner(network, stats, budget, opts.nested_eps)?
                .0
                .objective,
        )
    })
}

/// As [`solve_common_head_power`] with a precomputed training split.
pub fn solve_common_head_power_with_split(
    network: &Network,
    draw: &ChannelDraw,
    p_tot: f64,
    split: &TrainingSplit,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    check_budget(p_tot, split.p_trn)?;
    let channel = ChannelState::from_draw(network, &split.psi, draw)?;
    let budget = p_tot - split.p_trn;
    let (alloc, trace, iterations) =
        solve_common_head_power_inner(network, &stats_of(&channel), budget, opts.eps)?;
    if alloc.objective == 0.0 {
        return Err(Error::DegenerateBudget(
            "no cluster can be activated".into(),
        ));
    }
    let report = assemble(
        network,
        Variant::CommonHeadPower,
        p_tot,
        &split.psi,
        &channel,
        alloc.into_block(trace, iterations),
    )?;
    Ok(with_training_kkt(network, report))
}

/// Objective of the common-sensor-power inner search at `σ_c`.
pub fn common_sensor_power_profile(
    network: &Network,
    stats: &[ClusterStats],
    budget: f64,
    sc: f64,
) -> Result<f64> {
    let n = network.num_clusters() as f64;
    Ok(common_sensor_power_at(network, stats, budget, (1.0 - sc) * budget / n)?.objective)
}
