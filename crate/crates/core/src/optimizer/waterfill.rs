//! Budget split across clusters for fixed sensor powers.
//!
//! Cluster `l` contributes `T_l(δ) = a_l² β_l δ / (δ + β_l)` for head power
//! `δ`, where `a_l² = |h_hat_l|² P_l τ_l / σv²`. Setting `T_l'(δ) = λ` gives
//! `δ_l = [β_l (a_l / sqrt(λ) - 1)]⁺`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Per-cluster inputs: fixed power `p`, saturation `beta`, and gain `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterLevel {
    pub p: f64,
    pub beta: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterFill {
    /// Cluster budgets; zero for inactive clusters.
    pub v: Vec<f64>,
    pub delta: Vec<f64>,
    pub active: Vec<bool>,
    pub lambda: f64,
    /// False when no active-set size met the ranking condition and the best
    /// all-positive size was used instead.
    pub consistent: bool,
}

/// Clusters ranked by decreasing gain, ties broken by lower index.
pub fn ranking(levels: &[WaterLevel]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..levels.len()).collect();
    idx.sort_by(|&i, &j| levels[j].a.total_cmp(&levels[i].a).then(i.cmp(&j)));
    idx
}

/// Solves `max Σ_A T_l(δ_l)` subject to `Σ_A (P_l + δ_l) = budget` by
/// scanning the active-set size from the largest down.
///
/// Because dropping a cluster also frees its `P_l`, a tight budget can leave
/// no size at which the next-ranked cluster stays below the water level. The
/// split then takes the size with the best objective among those where every
/// active cluster gets `δ_l > 0`, and marks the result as not consistent.
pub fn water_fill(levels: &[WaterLevel], budget: f64) -> Result<WaterFill> {
    if !(budget > 0.0) {
        return Err(Error::DegenerateBudget(format!("budget {budget}")));
    }
    let order = ranking(levels);
    let usable = order.iter().take_while(|&&l| levels[l].a > 0.0).count();
    let mut fallback: Option<(f64, WaterFill)> = None;
    for n in (1..=usable).rev() {
        let set = &order[..n];
        let room = budget - set.iter().map(|&l| levels[l].p).sum::<f64>()
            + set.iter().map(|&l| levels[l].beta).sum::<f64>();
        if !(room > 0.0) {
            continue;
        }
        let sqrt_lambda = set
            .iter()
            .map(|&l| levels[l].beta * levels[l].a)
            .sum::<f64>()
            / room;
        let last = levels[set[n - 1]].a;
        if !(last > sqrt_lambda) {
            continue;
        }
        let next = order.get(n).map_or(0.0, |&l| levels[l].a);
        let mut fill = WaterFill {
            v: vec![0.0; levels.len()],
            delta: vec![0.0; levels.len()],
            active: vec![false; levels.len()],
            lambda: sqrt_lambda * sqrt_lambda,
            consistent: next <= sqrt_lambda,
        };
        for &l in set {
            let lv = levels[l];
            fill.delta[l] = lv.beta * (lv.a / sqrt_lambda - 1.0);
            fill.v[l] = lv.p + fill.delta[l];
            fill.active[l] = true;
        }
        if fill.consistent {
            return Ok(fill);
        }
        let obj = water_fill_objective(levels, &fill.delta, &fill.active);
        if fallback.as_ref().is_none_or(|(best, _)| obj > *best) {
            fallback = Some((obj, fill));
        }
    }
    fallback.map(|(_, f)| f).ok_or_else(|| {
        Error::DegenerateBudget(format!("budget {budget} does not activate any cluster"))
    })
}

/// Sum of `T_l` over the active clusters.
pub fn water_fill_objective(levels: &[WaterLevel], delta: &[f64], active: &[bool]) -> f64 {
    levels
        .iter()
        .zip(delta)
        .zip(active)
        .filter(|(_, &on)| on)
        .map(|((lv, &d), _)| lv.a * lv.a * lv.beta * d / (d + lv.beta))
        .sum()
}

/// Largest normalized violation of the optimality conditions: equal marginal
/// gain `λ` on the active set, marginal gain at zero below `λ` elsewhere, and
/// the budget. The inactive-cluster condition is skipped for inconsistent fills.
pub fn water_fill_residual(levels: &[WaterLevel], fill: &WaterFill, budget: f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut used = 0.0;
    for (l, lv) in levels.iter().enumerate() {
        if fill.active[l] {
            let slope = (lv.a * lv.beta / (fill.delta[l] + lv.beta)).powi(2);
            worst = worst.max((slope / fill.lambda - 1.0).abs());
            used += fill.v[l];
        } else if fill.consistent {
            worst = worst.max((lv.a * lv.a / fill.lambda - 1.0).max(0.0));
        }
    }
    worst.max((used - budget).abs() / budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{projected_gradient_ascent, AscentSpec};

    fn lv(p: f64, beta: f64, a: f64) -> WaterLevel {
        WaterLevel { p, beta, a }
    }

    #[test]
    fn single_cluster_takes_everything() {
        let f = water_fill(&[lv(0.3, 0.7, 2.0)], 5.0).unwrap();
        assert!((f.v[0] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn identical_clusters_share_equally() {
        let f = water_fill(&[lv(0.2, 0.5, 1.5); 4], 8.0).unwrap();
        assert!(f.v.iter().all(|v| (v - 2.0).abs() < 1e-14));
    }

    #[test]
    fn weak_clusters_drop_out_at_small_budget() {
        let levels = [lv(0.0, 1.0, 3.0), lv(0.0, 1.0, 0.5), lv(0.0, 1.0, 2.0)];
        let f = water_fill(&levels, 0.1).unwrap();
        assert_eq!(f.active, vec![true, false, false]);
        let f = water_fill(&levels, 100.0).unwrap();
        assert_eq!(f.active, vec![true, true, true]);
        assert!(water_fill_residual(&levels, &f, 100.0) < 1e-12);
    }

    #[test]
    fn ties_prefer_lower_index() {
        assert_eq!(
            ranking(&[lv(0.0, 1.0, 1.0), lv(0.0, 1.0, 2.0), lv(0.0, 1.0, 1.0)]),
            vec![1, 0, 2]
        );
    }

    #[test]
    fn released_power_can_force_fallback() {
        // Two clusters: the second is worth activating alone, but adding it
        // costs its sensor power and pushes the level above its gain.
        let levels = [lv(0.5, 1.0, 3.0), lv(0.9, 1.0, 2.9)];
        let f = water_fill(&levels, 1.0).unwrap();
        assert!(!f.consistent);
        assert_eq!(f.active, vec![true, false]);
        assert!((f.v[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_budget_is_degenerate() {
        assert!(matches!(
            water_fill(&[lv(0.0, 1.0, 1.0)], 0.0),
            Err(Error::DegenerateBudget(_))
        ));
    }

    #[test]
    fn matches_concave_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let levels: Vec<WaterLevel> = (0..5)
                .map(|_| lv(0.0, rng.random_range(0.1..2.0), rng.random_range(0.1..3.0)))
                .collect();
            let budget = rng.random_range(0.05..5.0);
            let fill = water_fill(&levels, budget).unwrap();
            let f = |d: &[f64]| water_fill_objective(&levels, d, &[true; 5]);
            let g = |d: &[f64]| {
                levels
                    .iter()
                    .zip(d)
                    .map(|(l, &x)| (l.a * l.beta / (x + l.beta)).powi(2))
                    .collect::<Vec<_>>()
            };
            let x0 = vec![budget / 5.0; 5];
            let oracle = projected_gradient_ascent(f, g, &x0, &AscentSpec::new(budget, 1e-10));
            let oracle = oracle.unwrap_or_else(|e| panic!("{e}"));
            for l in 0..5 {
                assert!(
                    (oracle.x[l] - fill.delta[l]).abs() < 1e-5 * budget,
                    "{:?} vs {:?}",
                    oracle.x,
                    fill.delta
                );
            }
        }
    }
}
