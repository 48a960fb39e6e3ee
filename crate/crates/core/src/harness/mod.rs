//! Experiment drivers: scenarios, Monte Carlo sweeps, gap factors, traces,
//! CSV output and the command-line entry point.

mod cli;
mod gaps;
mod output;
mod scenario;
mod sweep;
mod traces;

pub use cli::cli_main;
pub use gaps::{gap_factors, run_gaps, GapFactors, GapRow, GapTable};
pub use output::{
    gap_header, training_column, write_crb, write_gaps, write_objective_trace, write_sweep,
    write_traces, SWEEP_HEADER, TRACE_HEADER,
};
pub use scenario::{
    random_network, scenario_rng, three_cluster_network, CrbMode, DbGrid, RandomSpec, ScenarioKind,
    ScenarioSpec, ThreeClusterSpec,
};
pub use sweep::{
    mean_se, pairwise_sum, run_crb, run_sweep, SweepRow, SweepTable, MAX_FAILURE_RATE,
};
pub use traces::{budget_spread, three_cluster_traces, TraceRow};
