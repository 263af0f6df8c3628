use rayon::prelude::*;

use crate::error::{Error, Result};

/// Minibatch optimization budget shared by the noise predictor and the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate at the last step as a fraction of `learning_rate` (cosine decay).
    pub final_lr_fraction: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter("training steps and batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(0.0..=1.0).contains(&self.final_lr_fraction) {
            return Err(Error::InvalidParameter("invalid learning rate settings".into()));
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, step: usize) -> f64 {
        let progress = if self.steps <= 1 { 1.0 } else { step as f64 / (self.steps - 1) as f64 };
        let cosine = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        self.learning_rate * (self.final_lr_fraction + (1.0 - self.final_lr_fraction) * cosine)
    }
}

const CHUNK: usize = 16;

/// Sums per-example losses and parameter gradients.
///
/// Examples are grouped into fixed chunks that are reduced in index order, so
/// the result is bit-identical regardless of how many threads run it.
pub fn sum_example_gradients<F>(count: usize, param_count: usize, example: F) -> Result<(f64, Vec<f64>)>
where
    F: Fn(usize, &mut [f64]) -> Result<f64> + Sync,
{
    let chunks: Vec<(f64, Vec<f64>)> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut grad = vec![0.0; param_count];
            let mut loss = 0.0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
                loss += example(i, &mut grad)?;
            }
            Ok((loss, grad))
        })
        .collect::<Result<_>>()?;
    let mut total_grad = vec![0.0; param_count];
    let mut total_loss = 0.0;
    for (loss, grad) in chunks {
        total_loss += loss;
        total_grad.iter_mut().zip(&grad).for_each(|(a, b)| *a += b);
    }
    Ok((total_loss, total_grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_schedule_endpoints() {
        let cfg = TrainConfig { steps: 11, batch_size: 1, learning_rate: 1.0, final_lr_fraction: 0.1, seed: 0 };
        assert!((cfg.learning_rate_at(0) - 1.0).abs() < 1e-15);
        assert!((cfg.learning_rate_at(10) - 0.1).abs() < 1e-15);
        assert!((cfg.learning_rate_at(5) - 0.55).abs() < 1e-12);
    }

    #[test]
    fn sums_in_order() {
        let (loss, grad) = sum_example_gradients(40, 2, |i, g| {
            g[0] += i as f64;
            g[1] += 1.0;
            Ok(1.0)
        })
        .unwrap();
        assert_eq!(loss, 40.0);
        assert_eq!(grad, vec![780.0, 40.0]);
    }
}
