//! Ablation-study runner: per-trial grid search over hidden-layer size and
//! strategy parameters, multi-trial execution and table output.

mod config;
mod results;
mod runner;
mod table;

pub use config::{ExperimentConfig, GridSpec};
pub use results::{CellResult, ExperimentResults, TrialResult};
pub use runner::{
    grid_search, run_experiment, run_trial, GridChoice, RunOptions, TrialStreams, MAX_FAILED_SHARE,
    SIGNIFICANCE_LEVEL,
};
pub use table::{emit_table, TableFormat};
