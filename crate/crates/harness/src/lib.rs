//! Monte Carlo experiments for plug-in F_b classification: log-log rate fits
//! for the excess score and the threshold error, DKW exceedance tables and
//! byte-stable CSV, JSON and SVG reports.

pub mod config;
pub mod dkw;
pub mod experiment;
pub mod report;

pub use config::{ExperimentConfig, FamilySpec, NRule, Scoring};
pub use dkw::{run_dkw_check, DkwRow, DkwTable};
pub use experiment::{
    run_experiment, run_rate_experiment, run_threshold_experiment, CellSummary, ExperimentOutput, RateFitResult,
    Statistic,
};
pub use report::{emit_dkw_report, emit_report, ReportFormat, ALL_FORMATS};
