//! Splits a budget across clusters with fixed sensor powers; weak clusters
//! stay dry until the budget grows.

use wsn_fusion::optimizer::{water_fill, WaterLevel};

fn main() -> wsn_fusion::Result<()> {
    let levels = [
        WaterLevel {
            p: 0.4,
            beta: 0.5,
            a: 3.0,
        },
        WaterLevel {
            p: 0.3,
            beta: 0.8,
            a: 1.6,
        },
        WaterLevel {
            p: 0.2,
            beta: 1.0,
            a: 1.1,
        },
    ];
    for budget in [0.8, 1.5, 3.0, 6.0, 12.0] {
        let f = water_fill(&levels, budget)?;
        let v: Vec<String> = f.v.iter().map(|x| format!("{x:.3}")).collect();
        println!(
            "budget {budget:>5}: V = [{}], λ = {:.4}",
            v.join(", "),
            f.lambda
        );
    }
    Ok(())
}
