//! Experiment runner: JSON configuration, the reconstruction pipeline, and
//! report/image artifacts.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod render;

pub use config::{preset, ExperimentConfig};
pub use error::{CliError, Stage};
pub use pipeline::{oracle_check, run_experiment, run_pipeline, PipelineOutput, Report};
