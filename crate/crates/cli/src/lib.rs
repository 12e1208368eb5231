//! Batch front end: run configurations, experiment dispatch and reports.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{Experiment, RunConfig};
pub use experiments::run;
pub use report::{Check, ExperimentReport, Report, Status};
