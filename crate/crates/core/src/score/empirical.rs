use super::ScoreProvider;
use crate::diffusion::{NoiseSchedule, SampleBatch};
use crate::error::{check_dim, Error, Result};
use crate::nn::softmax;

/// The minimizer of denoising score matching over a finite dataset.
///
/// With a uniform prior over the points, the optimal score is the posterior
/// average of the conditional scores `(sqrt(alpha_t) x0_i - x_t) / (1 - alpha_t)`.
/// Duplicated points express non-uniform priors.
#[derive(Debug, Clone, Copy)]
pub struct DatasetOracle<'a> {
    dataset: &'a SampleBatch,
    schedule: &'a NoiseSchedule,
}

impl<'a> DatasetOracle<'a> {
    pub fn new(dataset: &'a SampleBatch, schedule: &'a NoiseSchedule) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        Ok(Self { dataset, schedule })
    }

    pub fn dataset(&self) -> &SampleBatch {
        self.dataset
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        self.schedule
    }

    /// Posterior responsibilities `q(x0_i | x_t)`.
    pub fn posterior_weights(&self, x_t: &[f64], t: usize) -> Result<Vec<f64>> {
        check_dim(self.dataset.dim(), x_t.len())?;
        self.schedule.check_step(t)?;
        let alpha = self.schedule.alpha(t)?;
        let root = alpha.sqrt();
        let denom = 2.0 * (1.0 - alpha);
        let logits: Vec<f64> = self
            .dataset
            .rows()
            .map(|x0| -x_t.iter().zip(x0).map(|(x, m)| (x - root * m).powi(2)).sum::<f64>() / denom)
            .collect();
        Ok(softmax(&logits))
    }
}

pub fn empirical_optimal_score(x_t: &[f64], t: usize, oracle: &DatasetOracle<'_>) -> Result<Vec<f64>> {
    let weights = oracle.posterior_weights(x_t, t)?;
    let alpha = oracle.schedule.alpha(t)?;
    let root = alpha.sqrt();
    // sum_i w_i (root x0_i - x_t) / (1 - alpha), with sum_i w_i = 1
    let mut mean = vec![0.0; x_t.len()];
    for (w, x0) in weights.iter().zip(oracle.dataset.rows()) {
        if *w == 0.0 {
            continue;
        }
        for (m, v) in mean.iter_mut().zip(x0) {
            *m += w * v;
        }
    }
    Ok(mean.iter().zip(x_t).map(|(m, x)| (root * m - x) / (1.0 - alpha)).collect())
}

impl ScoreProvider for DatasetOracle<'_> {
    fn dim(&self) -> usize {
        self.dataset.dim()
    }

    fn score(&self, x_t: &[f64], t: usize) -> Result<Vec<f64>> {
        empirical_optimal_score(x_t, t, self)
    }
}
