//! MSE and bound curves over the budget grid, written as CSV.

use wsn_fusion::harness::{run_sweep, write_sweep, CrbMode, ScenarioSpec};

fn main() -> wsn_fusion::Result<()> {
    let spec = ScenarioSpec {
        trials: 20,
        crb: CrbMode::MonteCarlo,
        ..ScenarioSpec::default()
    };
    let table = run_sweep(&spec)?;
    write_sweep(std::io::stdout().lock(), &table)?;
    eprintln!(
        "{} ordering violations, {} bound violations",
        table.violations(),
        table.bound_violations()
    );
    Ok(())
}
