//! Single-cluster subproblem: split a cluster budget `V` between the sensors
//! (`P`) and the head (`wᵀRw`) to maximize the cluster's Fisher-information
//! contribution.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::lambda1_quad;
use crate::model::ClusterView;
use crate::numerics::{bisect, golden_section_max, SearchSpec};

/// Channel statistics the optimizer sees for one cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterStats {
    pub h_hat_sq: f64,
    pub zeta_sq: f64,
}

impl ClusterStats {
    pub fn perfect(h_sq: f64) -> Self {
        Self {
            h_hat_sq: h_sq,
            zeta_sq: 0.0,
        }
    }

    pub fn gain(&self) -> f64 {
        self.h_hat_sq + self.zeta_sq
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub p: f64,
    pub w: DVector<f64>,
    pub v: f64,
    pub tau: f64,
    pub beta: f64,
    pub f: f64,
}

/// `β = σv² / (|h_hat|²(1 - σθ²Pτ) + ζ²)`.
pub fn beta(view: &ClusterView, stats: ClusterStats, p: f64, tau: f64) -> f64 {
    view.spec.sigma_v_sq / (stats.h_hat_sq * (1.0 - view.sigma_theta_sq * p * tau) + stats.zeta_sq)
}

/// Best achievable objective for sensor power `p` within budget `v`, written
/// without `β` so that it stays finite when `|h_hat| = 0`.
pub fn profile(view: &ClusterView, stats: ClusterStats, p: f64, v: f64) -> f64 {
    if !(p > 0.0 && p < v) || stats.h_hat_sq == 0.0 {
        return 0.0;
    }
    let tau = view.solve_rt(p).tau;
    let h2 = stats.h_hat_sq;
    h2 * p * tau
        / (h2 * (1.0 - view.sigma_theta_sq * p * tau)
            + stats.zeta_sq
            + view.spec.sigma_v_sq / (v - p))
}

/// Optimal fusion vector for fixed `p`, scaled so the cluster spends exactly `v`.
pub fn fusion_weights_given_p(
    view: &ClusterView,
    stats: ClusterStats,
    p: f64,
    v: f64,
) -> Result<(DVector<f64>, f64)> {
    if !(p > 0.0) || !(p < v) {
        return Err(Error::Domain(format!(
            "sensor power {p} must lie in (0, {v})"
        )));
    }
    let s = view.solve_rt(p);
    let w = &s.u * ((v - p) / s.tau).sqrt();
    Ok((w, profile(view, stats, p, v)))
}

/// Objective evaluated from its definition for arbitrary `(p, w)`.
pub fn objective_direct(view: &ClusterView, stats: ClusterStats, p: f64, w: &DVector<f64>) -> f64 {
    let wr = w.dot(&view.derived.rho);
    let num = p * stats.h_hat_sq * wr * wr;
    if num == 0.0 {
        return 0.0;
    }
    num / (view.spec.sigma_v_sq + lambda1_quad(view, p, w, stats.h_hat_sq, stats.zeta_sq))
}

/// Sensor power that is optimal for fixed weight direction `w` and budget `v`.
pub fn p_given_weights(
    view: &ClusterView,
    stats: ClusterStats,
    w: &DVector<f64>,
    v: f64,
) -> Result<f64> {
    if w.iter().all(|&x| x == 0.0) {
        return Err(Error::Domain("weights must be nonzero".into()));
    }
    let sv = view.spec.sigma_v_sq;
    let qs = stats.gain() * view.quad_sigma_q(w);
    let wo = view.quad(&view.derived.omega, w);
    Ok(v * (sv + qs) / (sv * (2.0 + wo) + qs))
}

/// Stationarity residual in `p` once `w` is eliminated; zero at the optimum,
/// positive below it and negative above it.
pub fn power_residual(view: &ClusterView, stats: ClusterStats, p: f64, v: f64) -> f64 {
    let s = view.solve_rt(p);
    let sv = view.spec.sigma_v_sq;
    let uqu = view.quad_sigma_q(&s.u);
    let uou = view.quad(&view.derived.omega, &s.u);
    sv * (v - 2.0 * p) * s.tau + stats.gain() * (v - p) * (v - p) * uqu - p * sv * (v - p) * uou
}

/// Golden-section search of the profile, then bisection on the stationarity
/// residual around the golden-section estimate.
pub fn solve_sp21(
    view: &ClusterView,
    stats: ClusterStats,
    v: f64,
    tol: f64,
) -> Result<InnerSolution> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!(
            "cluster budget {v} must be positive"
        )));
    }
    if stats.h_hat_sq == 0.0 {
        let p = 0.5 * v;
        let (w, _) = fusion_weights_given_p(view, stats, p, v)?;
        let tau = view.solve_rt(p).tau;
        return Ok(InnerSolution {
            p,
            w,
            v,
            tau,
            beta: f64::INFINITY,
            f: 0.0,
        });
    }
    let g = golden_section_max(
        |p| profile(view, stats, p, v),
        &SearchSpec::new(0.0, v, tol * v),
    )?;
    let res = |p: f64| power_residual(view, stats, p, v);
    let mut p = g.x;
    let mut half = tol * v;
    while half < v {
        let (a, b) = ((g.x - half).max(0.0), (g.x + half).min(v));
        if res(a) * res(b) <= 0.0 {
            if let Some(root) = bisect(res, a, b, 1e-15 * v) {
                if profile(view, stats, root, v) >= g.f * (1.0 - 1e-12) {
                    p = root;
                }
            }
            break;
        }
        half *= 4.0;
    }
    if !(p > 0.0 && p < v) {
        return Err(Error::Solver(format!(
            "no interior sensor power for budget {v}: search ended at {p}, residual {}",
            res(p)
        )));
    }
    let (w, f) = fusion_weights_given_p(view, stats, p, v)?;
    let tau = view.solve_rt(p).tau;
    Ok(InnerSolution {
        p,
        w,
        v,
        tau,
        beta: beta(view, stats, p, tau),
        f,
    })
}

/// Normalized residuals of the single-cluster optimality conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerKkt {
    /// Norm of the weight-gradient condition relative to `‖Rw‖`.
    pub stationarity_w: f64,
    /// Sensor-power condition relative to `1 + wᵀΩw`.
    pub stationarity_p: f64,
    /// Relative disagreement of the two expressions for the budget multiplier.
    pub multiplier_gap: f64,
    /// `|P + wᵀRw - V| / V`.
    pub budget: f64,
    pub gamma: f64,
}

pub fn sp21_kkt(view: &ClusterView, stats: ClusterStats, sol: &InnerSolution) -> InnerKkt {
    let (p, w, v) = (sol.p, &sol.w, sol.v);
    let u = objective_direct(view, stats, p, w);
    let st = view.sigma_theta_sq;
    let d = view.derived;
    let h2 = stats.h_hat_sq;
    let b = &d.pi * (st * stats.zeta_sq) + &d.delta * stats.gain();
    let r = view.r_t(p);
    let m = &d.pi * h2 - &b * u;
    let gamma = (v - p) / (view.spec.sigma_v_sq * u);
    let gamma2 = (1.0 + view.quad(&d.omega, w)) / view.quad(&m, w);
    let rw = &r * w;
    let qw = DVector::from_fn(w.len(), |i, _| view.spec.sigma_q[i] * w[i]);
    let grad = &rw + (qw * (stats.gain() * u) - &m * w * p) * gamma;
    let stat_p =
        (1.0 + view.quad(&d.omega, w) - gamma * view.quad(&m, w)) / (1.0 + view.quad(&d.omega, w));
    InnerKkt {
        stationarity_w: grad.norm() / rw.norm(),
        stationarity_p: stat_p.abs(),
        multiplier_gap: ((gamma - gamma2) / gamma).abs(),
        budget: ((p + view.ch_transmit_power(p, w)) - v).abs() / v,
        gamma,
    }
}
