//! Benchmark harness reproducing the pose-refinement experiments at desk
//! scale: config-driven scenes, seeded sampling, rejection-sampled VSD bins,
//! and CSV reporting.

pub mod config;
pub mod experiments;
pub mod report;
pub mod sampling;

pub use config::{BenchError, ExperimentConfig, ExperimentKind, Variant};
pub use experiments::run_experiment;
