//! Experiment driver and CLI surface for the nonadaptive cloning attack:
//! whole-database attack runs with per-string reports and CSV curves, the
//! exhaustive baseline, and the query-bound table.

pub mod config;
pub mod experiment;
pub mod output;
pub mod table;

pub use config::{
    DatasetSpec, ExperimentConfig, LogBaseChoice, MatrixChoice, Schedule, Tier,
    DEFAULT_CUTOFF_MULT, DEFAULT_TIER_ROWS,
};
pub use experiment::{
    run_attack_experiment, run_baseline_experiment, ArmResult, ArmSummary, ExperimentResult,
    TieredStream,
};
pub use output::{read_stats_csv, write_experiment_outputs};
pub use table::{emit_bounds_table, BoundsLine, BoundsRow};
