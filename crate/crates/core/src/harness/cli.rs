//! Command-line entry point.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::gaps::run_gaps;
use super::output::{write_crb, write_gaps, write_objective_trace, write_sweep, write_traces};
use super::scenario::{scenario_rng, CrbMode, ScenarioKind, ScenarioSpec};
use super::sweep::{run_crb, run_sweep};
use super::traces::three_cluster_traces;
use crate::crb::U2Model;
use crate::error::{Error, Result};
use crate::model::{from_db, load_config, ChannelDraw, Network};
use crate::optimizer::{
    solve_common_head_power, solve_common_sensor_power, solve_error_free_links,
    solve_fixed_training, solve_joint, solve_perfect_csi, SolverOptions,
};

#[derive(Debug, Parser)]
#[command(
    name = "wsn-fusion",
    version,
    about = "Power allocation and fusion bounds for clustered sensor networks"
)]
struct Cli {
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the number of Monte Carlo trials.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Overrides the relative stopping threshold of the solvers.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// CSV destination; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one allocation problem for one channel draw.
    Optimize(OptimizeArgs),
    /// MSE and bound curves over the budget grid.
    Sweep(SweepArgs),
    /// Bayesian bound over the budget grid.
    Crb(CrbArgs),
    /// Per-cluster power traces of a three-cluster scenario.
    Scenario(ScenarioArgs),
    /// Gap factors of the restricted allocations.
    Gaps(ScenarioArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Joint,
    /// Fixed training share.
    #[value(name = "sc1", alias = "fixed-training")]
    Sc1,
    /// Common sensor power.
    #[value(name = "sc2", alias = "common-sensor-power")]
    Sc2,
    /// Common head power.
    #[value(name = "sc3", alias = "common-head-power")]
    Sc3,
    /// Perfect channel knowledge.
    #[value(name = "p3", alias = "perfect-csi")]
    P3,
    /// Error-free sensor links.
    #[value(name = "p4", alias = "error-free-links")]
    P4,
}

#[derive(Debug, Args)]
struct Source {
    /// Scenario file (TOML or JSON).
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long, value_enum, default_value = "joint")]
    variant: VariantArg,
    /// Total power in dB.
    #[arg(long, allow_hyphen_values = true)]
    ptot: f64,
    /// Training share of the budget for `sc1`.
    #[arg(long, default_value_t = 0.25)]
    ptrn_frac: f64,
    /// Network file; takes precedence over the scenario's network.
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    #[command(flatten)]
    source: Source,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    /// Bound evaluator inside the sweep.
    #[arg(long, value_enum)]
    crb: Option<CrbArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CrbArg {
    None,
    MonteCarlo,
    Series,
}

impl From<CrbArg> for CrbMode {
    fn from(a: CrbArg) -> Self {
        match a {
            CrbArg::None => CrbMode::None,
            CrbArg::MonteCarlo => CrbMode::MonteCarlo,
            CrbArg::Series => CrbMode::Series,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Complex,
    Real,
}

#[derive(Debug, Args)]
struct CrbArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum, default_value = "monte-carlo")]
    evaluator: CrbArg,
    /// Truncation order of the series.
    #[arg(long)]
    m_max: Option<usize>,
    /// Hermite nodes against the prior of the source.
    #[arg(long)]
    theta_nodes: Option<usize>,
    /// Minimum radial and angular nodes of the product integral.
    #[arg(long)]
    radial: Option<usize>,
    #[arg(long)]
    angular: Option<usize>,
    /// Minimum points per axis of the output grid.
    #[arg(long)]
    z_nodes: Option<usize>,
    /// Samples per cluster and trial for simulation.
    #[arg(long)]
    samples: Option<usize>,
    /// Hermite nodes per axis of the simulated density.
    #[arg(long)]
    rule_nodes: Option<usize>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[command(flatten)]
    source: Source,
}

fn load_spec(source: &Source, cli: &Cli) -> Result<ScenarioSpec> {
    let mut spec = match &source.scenario {
        Some(p) => ScenarioSpec::load(p)?,
        None => ScenarioSpec::default(),
    };
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    if let Some(t) = cli.trials {
        spec.trials = t;
    }
    if let Some(e) = cli.eps {
        spec.eps = e;
    }
    spec.validate()?;
    Ok(spec)
}

fn sink(cli: &Cli) -> Result<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn optimize(cli: &Cli, a: &OptimizeArgs) -> Result<()> {
    let spec = load_spec(&a.source, cli)?;
    let network = match &a.config {
        Some(p) => Network::new(load_config(p)?)?,
        None => spec.network()?,
    };
    let opts = SolverOptions::with_eps(spec.eps);
    let p_tot = from_db(a.ptot);
    let draw = ChannelDraw::sample(&network, &mut scenario_rng(spec.seed, 1));
    let report = match a.variant {
        VariantArg::Joint => solve_joint(&network, &draw, p_tot, &opts)?,
        VariantArg::Sc1 => solve_fixed_training(&network, &draw, p_tot, a.ptrn_frac, &opts)?,
        VariantArg::Sc2 => solve_common_sensor_power(&network, &draw, p_tot, &opts)?,
        VariantArg::Sc3 => solve_common_head_power(&network, &draw, p_tot, &opts)?,
        VariantArg::P3 => solve_perfect_csi(&network, &draw.h, p_tot, &opts)?,
        VariantArg::P4 => solve_error_free_links(&network, &draw.h, p_tot)?,
    };
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Numerical(format!("report serialization: {e}")))?;
    if let Err(e) = writeln!(io::stdout().lock(), "{text}") {
        if e.kind() != io::ErrorKind::BrokenPipe {
            return Err(e.into());
        }
    }
    if cli.out.is_some() {
        write_objective_trace(sink(cli)?, &report.trace)?;
    }
    Ok(())
}

fn crb(cli: &Cli, a: &CrbArgs) -> Result<()> {
    let mut spec = load_spec(&a.source, cli)?;
    spec.crb = a.evaluator.into();
    let q = &mut spec.crb_series;
    if let Some(m) = a.m_max {
        q.series.m_max = m;
    }
    if let Some(n) = a.theta_nodes {
        q.quad.theta_nodes = n;
    }
    if let Some(n) = a.radial {
        q.quad.radial = n;
    }
    if let Some(n) = a.angular {
        q.quad.angular = n;
    }
    if let Some(n) = a.z_nodes {
        q.quad.z_nodes = n;
    }
    if let Some(n) = a.samples {
        spec.crb_samples = n;
    }
    if let Some(n) = a.rule_nodes {
        spec.crb_rule_nodes = n;
    }
    if let Some(m) = a.model {
        spec.crb_model = match m {
            ModelArg::Complex => U2Model::Complex,
            ModelArg::Real => U2Model::Real,
        };
    }
    write_crb(sink(cli)?, &run_crb(&spec)?)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Optimize(a) => optimize(cli, a),
        Command::Sweep(a) => {
            let mut spec = load_spec(&a.source, cli)?;
            if let Some(c) = a.crb {
                spec.crb = c.into();
            }
            let table = run_sweep(&spec)?;
            write_sweep(sink(cli)?, &table)?;
            if table.violations() + table.bound_violations() > 0 {
                eprintln!(
                    "warning: {} trials broke the MSE ordering, {} left the bound interval",
                    table.violations(),
                    table.bound_violations()
                );
            }
            Ok(())
        }
        Command::Crb(a) => crb(cli, a),
        Command::Scenario(a) => {
            let spec = load_spec(&a.source, cli)?;
            if spec.kind != ScenarioKind::ThreeCluster {
                return Err(Error::Config(
                    "power traces need a three-cluster scenario".into(),
                ));
            }
            write_traces(sink(cli)?, &three_cluster_traces(&spec)?)
        }
        Command::Gaps(a) => {
            let spec = load_spec(&a.source, cli)?;
            let table = run_gaps(&spec)?;
            write_gaps(sink(cli)?, &table)?;
            if table.violations() + table.bound_violations() > 0 {
                eprintln!(
                    "warning: {} trials had a restriction beat the joint solution, {} left the bound interval",
                    table.violations(),
                    table.bound_violations()
                );
            }
            Ok(())
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand. Returns 0 on
/// success, 2 on a usage or configuration error and 1 when a solver fails.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Io(_) => 2,
                _ => 1,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_flags_are_usage_errors() {
        assert_eq!(cli_main(["wsn-fusion", "optimize", "--bogus"]), 2);
        assert_eq!(
            cli_main(["wsn-fusion", "optimize", "--variant", "sc9", "--ptot", "1"]),
            2
        );
        assert_eq!(cli_main(["wsn-fusion", "--help"]), 0);
    }

    #[test]
    fn degenerate_budget_is_a_solver_error() {
        assert_eq!(
            cli_main([
                "wsn-fusion",
                "optimize",
                "--variant",
                "sc1",
                "--ptot",
                "0",
                "--ptrn-frac",
                "1.5"
            ]),
            1
        );
    }

    #[test]
    fn random_scenario_has_no_traces() {
        assert_eq!(cli_main(["wsn-fusion", "scenario"]), 2);
    }
}
