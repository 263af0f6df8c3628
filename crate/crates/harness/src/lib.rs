//! Experiment harness: synthetic datasets, checkpoints, CSV artifacts and the
//! staged pipeline behind the `minority` command.

pub mod checkpoint;
pub mod config;
pub mod csv;
pub mod dataset;
pub mod error;
pub mod pipeline;
pub mod seeds;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use pipeline::{run_pipeline, Experiment, Stage, Status};
