//! Experiment harness: synthetic regimes, real-data ingestion, multi-run
//! orchestration and result files.

mod config;
mod data;
mod regime;
mod runner;

pub use config::{ExperimentFile, ExperimentSpec, Regime};
pub use data::{load_csv_series, YearFilter};
pub use regime::{build_regime, initial_transition, RegimeInstance};
pub use runner::{
    execute_run, execute_runs, run_experiment, summarize, write_summary_csv, ExperimentReport, LengthResult, Method,
    RunRecord, SummaryRow,
};
