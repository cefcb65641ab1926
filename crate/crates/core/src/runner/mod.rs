//! Configuration-driven runs: build datasets and extractors, execute axis
//! jobs, and write reports, tables and plots.

mod config;
mod execute;
mod plot;
mod tables;

pub use config::{DatasetSource, ExternalPair, ExtractorConfig, JobConfig, RunConfig, TransformConfig, SMOKE_CONFIG};
pub use execute::{
    build_dataset, build_extractor, cmd_run, job_hash, job_name, load_report, report_json, JobRecord, JobStatus, RunOptions,
    RunSummary, DEFAULT_OUTPUT_DIR, REPORTS_DIR, SUMMARY_FILE,
};
pub use plot::{bar_chart, cmd_plot, line_chart};
pub use tables::{
    cmd_report, curves_table, disentanglement_table, load_reports, results_table, write_tables, CURVES_CSV, DISENTANGLEMENT_CSV,
    METRIC_COLUMNS, RESULTS_CSV,
};

use crate::error::Error;

/// Process exit status for an error: 1 for invalid input, 3 for I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => 3,
        _ => 1,
    }
}
