//! Diffusion-model laboratory for minority score and minority guidance.
//!
//! The crate covers the full path from a variance schedule to guided samples:
//!
//! - [`diffusion`]: schedules, forward perturbation, ancestral sampling.
//! - [`score`]: analytic mixture scores, the exact finite-dataset optimal
//!   score, and a trained noise predictor.
//! - [`nn`]: a dense network with exact parameter and input gradients.
//! - [`minority`]: one-shot reconstruction, minority score, quantile classes.
//! - [`guidance`]: the ordinal classifier and guided samplers.
//! - [`metrics`]: AvgkNN, LOF, improved precision/recall, histograms.
//!
//! Steps are 1-based throughout; `t = 0` is clean data.
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusion;
pub mod error;
pub mod guidance;
pub mod metrics;
pub mod minority;
pub mod nn;
pub mod rng;
pub mod score;
pub mod stats;

pub use error::{Error, Result};
