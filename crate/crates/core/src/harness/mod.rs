//! Experiment harness: manifests, trial grids, copy-fraction sweeps, paired
//! signed-rank tests and report files.

mod manifest;
mod report;
mod run;
mod wilcoxon;

pub use manifest::{Cell, DatasetRef, RunManifest, SplitGrid, SCHEMA_VERSION};
pub use report::{
    aggregate, emit_report, emit_sweep, json_bytes, read_trials_csv, trials_csv, AggregateFile, Comparison,
    ExperimentReport, ReportFormat, SweepPoint, SweepReport, SweepTrialRow, VariantStats,
};
pub use run::{
    parse_p_grid, run_grid, run_grid_with, sweep_copy_fraction, sweep_copy_fraction_with, RunOptions, TrialFailure,
    TrialRow, TrialTiming, Variant, WORKERS_ENV,
};
pub use wilcoxon::{wilcoxon_signed_rank, wilcoxon_signed_rank_with, WilcoxonMode, WilcoxonResult, EXACT_LIMIT};
