//! Minimal dense network with exact parameter and input gradients.

mod mlp;
mod optim;
mod time;
mod train;

pub use mlp::{log_softmax, log_sum_exp, softmax, Activation, Mlp, ScalarHead};
pub use optim::Adam;
pub use time::time_features;
pub use train::{sum_example_gradients, TrainConfig};
