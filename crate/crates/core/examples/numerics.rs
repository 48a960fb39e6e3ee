//! The two search kernels: golden-section line search and projected gradient
//! ascent on the simplex.

use wsn_fusion::numerics::{golden_section_max, projected_gradient_ascent, AscentSpec, SearchSpec};

fn main() -> wsn_fusion::Result<()> {
    let g = golden_section_max(
        |x: f64| (1.0 + 3.0 * x).ln() - x,
        &SearchSpec::new(0.0, 4.0, 1e-6),
    )?;
    println!(
        "golden section: x = {:.7} (exact 2/3) in {} iterations, contraction {:.4}",
        g.x,
        g.iterations,
        g.contraction_ratio()
    );
    let weights = [1.0, 2.0, 0.5];
    let f = |x: &[f64]| {
        x.iter()
            .zip(&weights)
            .map(|(x, w)| w * (1.0 + x).ln())
            .sum::<f64>()
    };
    let grad = |x: &[f64]| {
        x.iter()
            .zip(&weights)
            .map(|(x, w)| w / (1.0 + x))
            .collect::<Vec<_>>()
    };
    let r = projected_gradient_ascent(f, grad, &[1.0; 3], &AscentSpec::new(3.0, 1e-10))?;
    println!(
        "simplex ascent: x = {:.6?}, f = {:.6}, {} iterations (exact [2/3, 7/3, 0])",
        r.x, r.f, r.iterations
    );
    Ok(())
}
