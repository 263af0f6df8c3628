//! Noise schedules, forward perturbation and the ancestral reverse sampler.
//!
//! Index convention: steps run `1..=T`; `t = 0` denotes clean data.

mod batch;
mod sampler;
mod schedule;

pub use batch::SampleBatch;
pub use sampler::{
    ancestral_step, ancestral_update, generate, make_plan, perturb, run_chain, StepPlan,
};
pub use schedule::{NoiseSchedule, DEFAULT_BETA_END, DEFAULT_BETA_START, DEFAULT_TOTAL_STEPS};
