//! Property tests for the model, estimator, numerics and optimizer invariants.

use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use wsn_fusion::estimator::{mse_d, mse_d1, mse_d2, mse_d3, mse_d_full_covariance};
use wsn_fusion::harness::{
    gap_factors, random_network, run_sweep, scenario_rng, DbGrid, RandomSpec, ScenarioSpec,
};
use wsn_fusion::model::{
    from_db, network_power, to_db, ChannelDraw, ChannelState, Network, PowerAllocation,
};
use wsn_fusion::numerics::{
    golden_section_max, project_simplex, projected_gradient_ascent, AscentSpec, SearchSpec,
};
use wsn_fusion::optimizer::{fusion_weights_given_p, solve_joint, ClusterStats, SolverOptions};

fn network(seed: u64, clusters: usize) -> Network {
    let spec = RandomSpec {
        clusters,
        max_sensors: 5,
        ..RandomSpec::default()
    };
    random_network(&spec, 1.0, &mut scenario_rng(seed, 0)).unwrap()
}

/// Random training powers, sensor powers and weights for `net`.
fn allocation(net: &Network, seed: u64) -> PowerAllocation {
    let mut rng = scenario_rng(seed, 7);
    let n = net.num_clusters();
    let psi: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    PowerAllocation {
        p_trn: psi.iter().sum(),
        psi,
        p: (0..n).map(|_| 2.0 * rng.random::<f64>()).collect(),
        w: net
            .clusters()
            .map(|c| {
                (0..c.sensors())
                    .map(|_| rng.random::<f64>() - 0.5)
                    .collect()
            })
            .collect(),
    }
}

fn channel(net: &Network, alloc: &PowerAllocation, seed: u64) -> ChannelState {
    let draw = ChannelDraw::sample(net, &mut scenario_rng(seed, 1));
    ChannelState::from_draw(net, &alloc.psi, &draw).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derived_matrices_fit_together(seed in any::<u64>()) {
        let net = network(seed, 3);
        for c in net.clusters() {
            let d = c.derived;
            let pi = &d.rho * d.rho.transpose();
            prop_assert!((&pi - &d.pi).norm() <= 1e-14 * pi.norm());
            let omega = &d.delta + &d.pi * c.sigma_theta_sq;
            prop_assert!((&omega - &d.omega).norm() <= 1e-12 * omega.norm());
            prop_assert!(d.sqrt_d.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn network_power_is_training_plus_cluster_budgets(seed in any::<u64>()) {
        let net = network(seed, 4);
        let a = allocation(&net, seed);
        let by_cluster: f64 = a.p_trn
            + (0..4)
                .map(|l| {
                    let c = net.cluster(l);
                    a.p[l] + c.ch_transmit_power(a.p[l], &a.weights(l))
                })
                .sum::<f64>();
        let total = network_power(&net, &a);
        prop_assert!((total - by_cluster).abs() <= 1e-12 * total);
    }

    #[test]
    fn estimation_error_stays_in_range(seed in any::<u64>(), psi in 0.0f64..50.0) {
        let net = network(seed, 3);
        let draw = ChannelDraw::sample(&net, &mut scenario_rng(seed, 1));
        let c = ChannelState::from_draw(&net, &[psi; 3], &draw).unwrap();
        let none = ChannelState::from_draw(&net, &[0.0; 3], &draw).unwrap();
        for (l, s) in net.config.clusters.iter().enumerate() {
            prop_assert!(c.zeta_sq[l] >= 0.0 && c.zeta_sq[l] <= 2.0 * s.sigma_h_sq);
            prop_assert_eq!(none.h_hat[l], Complex64::new(0.0, 0.0));
            prop_assert!((none.zeta_sq[l] - 2.0 * s.sigma_h_sq).abs() <= 1e-15);
        }
    }

    #[test]
    fn mse_is_a_posterior_variance(seed in any::<u64>()) {
        let net = network(seed, 4);
        let a = allocation(&net, seed);
        let ch = channel(&net, &a, seed);
        let d = mse_d(&net, &a, &ch).unwrap();
        prop_assert!(d > 0.0 && d <= net.sigma_theta_sq());
        let dense = mse_d_full_covariance(&net, &a, &ch).unwrap();
        prop_assert!(((d - dense) / d).abs() <= 1e-10);
    }

    #[test]
    fn mse_ignores_weight_sign(seed in any::<u64>(), l in 0usize..4) {
        let net = network(seed, 4);
        let mut a = allocation(&net, seed);
        let ch = channel(&net, &a, seed);
        let d = mse_d(&net, &a, &ch).unwrap();
        a.w[l].iter_mut().for_each(|x| *x = -*x);
        prop_assert!((mse_d(&net, &a, &ch).unwrap() - d).abs() <= 1e-14 * d);
    }

    #[test]
    fn better_estimate_lowers_mse(seed in any::<u64>(), l in 0usize..4, gain in 1.0f64..5.0) {
        let net = network(seed, 4);
        let a = allocation(&net, seed);
        let mut ch = channel(&net, &a, seed);
        let d = mse_d(&net, &a, &ch).unwrap();
        ch.h_hat[l] *= gain.sqrt();
        prop_assert!(mse_d(&net, &a, &ch).unwrap() <= d * (1.0 + 1e-14));
    }

    #[test]
    fn bounds_are_ordered_for_matched_weights(seed in any::<u64>()) {
        let net = network(seed, 4);
        let a = allocation(&net, seed);
        let ch = channel(&net, &a, seed);
        // With the estimate taken as the true channel, removing the estimation
        // error can only help.
        let d = mse_d(&net, &a, &ch).unwrap();
        let d1 = mse_d1(&net, &a.p, &a.w, &ch.h_hat).unwrap();
        prop_assert!(d1 <= d);
        let d2 = mse_d2(&net, &a.w, &ch.h).unwrap();
        prop_assert!(mse_d3(&net) < d2);
    }

    #[test]
    fn simplex_projection_is_feasible_and_idempotent(
        y in prop::collection::vec(-3.0f64..3.0, 1..8),
        budget in 0.1f64..5.0,
    ) {
        let x = project_simplex(&y, budget);
        prop_assert!(x.iter().all(|&v| v >= 0.0));
        prop_assert!((x.iter().sum::<f64>() - budget).abs() <= 1e-12 * budget.max(1.0));
        let again = project_simplex(&x, budget);
        for (a, b) in x.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn simplex_ascent_stays_feasible_and_climbs(
        a in prop::collection::vec(0.2f64..3.0, 4),
        c in prop::collection::vec(-0.5f64..1.5, 4),
        budget in 0.2f64..3.0,
    ) {
        let f = |x: &[f64]| -0.5 * (0..4).map(|i| a[i] * (x[i] - c[i]).powi(2)).sum::<f64>();
        let g = |x: &[f64]| (0..4).map(|i| -a[i] * (x[i] - c[i])).collect::<Vec<_>>();
        let r = projected_gradient_ascent(f, g, &[budget / 4.0; 4], &AscentSpec::new(budget, 1e-9))
            .unwrap();
        prop_assert!(r.x.iter().all(|&v| v >= 0.0));
        prop_assert!((r.x.iter().sum::<f64>() - budget).abs() <= 1e-9 * budget);
        prop_assert!(r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs()));
    }

    #[test]
    fn golden_section_finds_the_peak(peak in 0.01f64..0.99, scale in 0.1f64..10.0) {
        let r = golden_section_max(
            |x| -scale * (x - peak).powi(2),
            &SearchSpec::new(0.0, 1.0, 1e-6),
        )
        .unwrap();
        prop_assert!((r.x - peak).abs() <= 1e-6);
        prop_assert!((r.contraction_ratio() - 0.618).abs() <= 0.01);
    }

    #[test]
    fn optimal_weights_spend_the_cluster_budget(
        seed in any::<u64>(),
        v in 0.05f64..20.0,
        share in 0.01f64..0.99,
        h2 in 0.0f64..3.0,
        zeta in 0.001f64..1.0,
    ) {
        let net = network(seed, 1);
        let c = net.cluster(0);
        let p = share * v;
        let stats = ClusterStats { h_hat_sq: h2, zeta_sq: zeta };
        let (w, f) = fusion_weights_given_p(&c, stats, p, v).unwrap();
        let spent = p + c.ch_transmit_power(p, &w);
        prop_assert!((spent - v).abs() <= 1e-10 * v);
        prop_assert!(f >= 0.0);
    }

    #[test]
    fn gap_factors_lie_in_unit_interval(
        d in 0.01f64..0.5,
        extra in prop::collection::vec(0.0f64..1.0, 3),
        crb_share in 0.01f64..0.99,
    ) {
        let st = 1.0;
        let crb = crb_share * d;
        let dx: Vec<f64> = extra.iter().map(|e| d + e * (st - d)).collect();
        let g = gap_factors(d, dx[0], dx[1], dx[2], crb, st).unwrap();
        for x in [g.g_t, g.g_c, g.g_d] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn decibels_round_trip(x in 1e-6f64..1e6) {
        prop_assert!((from_db(to_db(x)) - x).abs() <= 1e-12 * x);
    }

    #[test]
    fn db_grid_steps_evenly(start in -20.0f64..10.0, n in 1usize..30, step in 0.5f64..4.0) {
        let stop = start + (n - 1) as f64 * step;
        let pts = DbGrid::Range { start, stop, step }.points();
        prop_assert_eq!(pts.len(), n);
        for w in pts.windows(2) {
            prop_assert!((w[1] - w[0] - step).abs() <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn joint_solution_spends_the_budget_and_climbs(seed in any::<u64>(), db in -8.0f64..24.0) {
        let net = network(seed, 3);
        let draw = ChannelDraw::sample(&net, &mut scenario_rng(seed, 1));
        let p = from_db(db);
        let r = solve_joint(&net, &draw, p, &SolverOptions::default()).unwrap();
        prop_assert!((network_power(&net, &r.alloc) - p).abs() <= 1e-6 * p);
        prop_assert!(r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs()));
        prop_assert!(r.mse > 0.0 && r.mse < net.sigma_theta_sq());
        for (l, &on) in r.active.iter().enumerate() {
            if !on {
                prop_assert_eq!(r.alloc.p[l], 0.0);
                prop_assert!(r.alloc.w[l].iter().all(|&x| x == 0.0));
            }
        }
        let w0 = DVector::from_column_slice(&r.alloc.w[0]);
        prop_assert!(w0.iter().all(|x| x.is_finite()));
    }
}

fn small_sweep(trials: usize) -> ScenarioSpec {
    ScenarioSpec {
        trials,
        ptot_db: DbGrid::List(vec![0.0, 10.0]),
        random: RandomSpec {
            clusters: 4,
            max_sensors: 4,
            ..RandomSpec::default()
        },
        ..ScenarioSpec::default()
    }
}

#[test]
fn standard_errors_shrink_with_trials() {
    let few = run_sweep(&small_sweep(40)).unwrap();
    let many = run_sweep(&small_sweep(640)).unwrap();
    for (a, b) in few.rows.iter().zip(&many.rows) {
        // Sixteen times the trials should quarter the standard error.
        let ratio = a.se_d / b.se_d;
        assert!(
            (2.5..6.5).contains(&ratio),
            "{} dB: ratio {ratio}",
            a.ptot_db
        );
    }
}

#[test]
fn identical_configuration_gives_identical_csv() {
    let spec = small_sweep(3);
    let mut a = Vec::new();
    let mut b = Vec::new();
    wsn_fusion::harness::write_sweep(&mut a, &run_sweep(&spec).unwrap()).unwrap();
    wsn_fusion::harness::write_sweep(&mut b, &run_sweep(&spec).unwrap()).unwrap();
    assert_eq!(a, b);
}
