//! The batch study: ingest, transform, describe, dependence tables, HP gap,
//! per-quantile selection and inference, and the report files.

pub mod config;
mod describe;
mod report;
mod study;

pub use config::{PoolSpec, Role, SeriesSpec, StudyConfig};
pub use describe::{describe, inf_quantile, DescribeRow, DescribeTables};
pub use report::{emit_plot_data, write_report, write_report_atomic};
pub use study::{
    compute_study, derive_series, prepare, run_study, run_study_file, CrossingRow, DependenceEntry,
    Metadata, Prepared, QuantileEntry, SkippedSample, StudyReport,
};
