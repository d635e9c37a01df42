//! Batch front end: configuration parsing and job execution.

pub mod config;
pub mod jobs;

pub use config::{parse_config, JobConfig, JobKind, JobSpec, SearchOptions, Spacing, SweepAxis};
pub use jobs::{run, JobOutput};
