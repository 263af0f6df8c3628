//! Interchangeable realizations of the score `grad_x log q_t(x)`.

mod empirical;
mod gmm;
mod network;

pub use empirical::{empirical_optimal_score, DatasetOracle};
pub use gmm::{gmm_score, GmmComponent, GmmScore, GmmSpec};
pub use network::{
    dsm_draw, dsm_loss, dsm_loss_and_grads, network_score, train_score_net, EpsilonNet, NetworkScore,
    DEFAULT_HIDDEN, DEFAULT_TIME_WIDTH,
};

use crate::error::Result;

/// Anything that can evaluate a noise-conditioned score at step `t` (1-based).
pub trait ScoreProvider: Sync {
    fn dim(&self) -> usize;

    fn score(&self, x_t: &[f64], t: usize) -> Result<Vec<f64>>;
}

impl<P: ScoreProvider + ?Sized> ScoreProvider for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn score(&self, x_t: &[f64], t: usize) -> Result<Vec<f64>> {
        (**self).score(x_t, t)
    }
}
