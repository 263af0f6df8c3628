//! Tweedie one-shot reconstruction, the minority score and its ordinal binning.
//!
//! A sample is perturbed to step `t`, denoised back in one shot with the
//! posterior-mean estimate, and scored by how far the reconstruction lands
//! from the original. Samples the model cannot reconstruct are the ones it
//! considers unlikely.

mod binning;
mod distance;

pub use binning::{quantile_bins, MinorityRecord, OrdinalBinning};
pub use distance::{distance, DistanceKind};

use rayon::prelude::*;

use crate::diffusion::{perturb, NoiseSchedule, SampleBatch};
use crate::error::{Error, Result};
use crate::rng::{standard_normal, stream_rng};
use crate::score::ScoreProvider;

pub const DEFAULT_T_FRACTION: f64 = 0.9;
pub const DEFAULT_DRAWS: usize = 1;

/// Posterior-mean reconstruction `(x_t + (1 - alpha_t) s(x_t, t)) / sqrt(alpha_t)`.
pub fn tweedie_denoise<P: ScoreProvider + ?Sized>(
    x_t: &[f64],
    t: usize,
    provider: &P,
    schedule: &NoiseSchedule,
) -> Result<Vec<f64>> {
    schedule.check_step(t)?;
    let alpha = schedule.alpha(t)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha_{t} = 0; reconstruction undefined")));
    }
    let score = provider.score(x_t, t)?;
    let root = alpha.sqrt();
    Ok(x_t
        .iter()
        .zip(&score)
        .map(|(x, s)| (x + (1.0 - alpha) * s) / root)
        .collect())
}

/// Settings for [`minority_score`].
#[derive(Debug, Clone, PartialEq)]
pub struct MinorityParams {
    /// Perturbation step.
    pub t: usize,
    /// Number of noise draws averaged per sample.
    pub draws: usize,
    pub distance: DistanceKind,
}

impl MinorityParams {
    /// `t = round(0.9 T)`, one draw, L2 distance.
    pub fn defaults_for(schedule: &NoiseSchedule) -> Self {
        Self {
            t: schedule.step_at_fraction(DEFAULT_T_FRACTION),
            draws: DEFAULT_DRAWS,
            distance: DistanceKind::L2,
        }
    }
}

/// Mean reconstruction distance of `x0` over `params.draws` noise draws.
///
/// Noise comes from `stream_rng(seed, 0)`; see [`minority_scores`] for the
/// per-sample stream layout used on batches.
pub fn minority_score<P: ScoreProvider + ?Sized>(
    x0: &[f64],
    provider: &P,
    schedule: &NoiseSchedule,
    params: &MinorityParams,
    seed: u64,
) -> Result<f64> {
    minority_score_with_rng(x0, provider, schedule, params, &mut stream_rng(seed, 0))
}

pub fn minority_score_with_rng<P, R>(
    x0: &[f64],
    provider: &P,
    schedule: &NoiseSchedule,
    params: &MinorityParams,
    rng: &mut R,
) -> Result<f64>
where
    P: ScoreProvider + ?Sized,
    R: rand::Rng + ?Sized,
{
    schedule.check_step(params.t)?;
    if params.draws == 0 {
        return Err(Error::InvalidParameter("at least one noise draw is required".into()));
    }
    let mut total = 0.0;
    for _ in 0..params.draws {
        let z = standard_normal(rng, x0.len());
        let x_t = perturb(x0, params.t, &z, schedule)?;
        let recon = tweedie_denoise(&x_t, params.t, provider, schedule)?;
        total += distance(x0, &recon, &params.distance)?;
    }
    Ok(total / params.draws as f64)
}

/// Minority scores of every row; row `i` draws its noise from `stream_rng(seed, i)`.
pub fn minority_scores<P: ScoreProvider + ?Sized>(
    data: &SampleBatch,
    provider: &P,
    schedule: &NoiseSchedule,
    params: &MinorityParams,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..data.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            minority_score_with_rng(data.row(i), provider, schedule, params, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::DatasetOracle;

    struct Zero(usize);

    impl ScoreProvider for Zero {
        fn dim(&self) -> usize {
            self.0
        }
        fn score(&self, _: &[f64], _: usize) -> Result<Vec<f64>> {
            Ok(vec![0.0; self.0])
        }
    }

    #[test]
    fn zero_score_rescales() {
        let s = NoiseSchedule::linear(10, 0.05, 0.1).unwrap();
        let a = s.alpha(4).unwrap();
        let got = tweedie_denoise(&[1.0, -2.0], 4, &Zero(2), &s).unwrap();
        assert_eq!(got, vec![1.0 / a.sqrt(), -2.0 / a.sqrt()]);
    }

    #[test]
    fn single_point_reconstruction_is_exact() {
        let s = NoiseSchedule::linear(10, 0.05, 0.1).unwrap();
        let data = SampleBatch::new(2, vec![0.5, -1.5]).unwrap();
        let oracle = DatasetOracle::new(&data, &s).unwrap();
        for t in 1..=10 {
            let r = tweedie_denoise(&[3.0, 7.0], t, &oracle, &s).unwrap();
            assert!((r[0] - 0.5).abs() < 1e-10 && (r[1] + 1.5).abs() < 1e-10, "{r:?}");
        }
        let params = MinorityParams { t: 9, draws: 4, distance: DistanceKind::L2 };
        let m = minority_score(&[0.5, -1.5], &oracle, &s, &params, 3).unwrap();
        assert!(m < 1e-10);
    }

    #[test]
    fn deterministic_per_seed() {
        let s = NoiseSchedule::linear(10, 0.05, 0.1).unwrap();
        let data = SampleBatch::new(1, vec![0.0, 1.0, 5.0]).unwrap();
        let oracle = DatasetOracle::new(&data, &s).unwrap();
        let params = MinorityParams { t: 9, draws: 1, distance: DistanceKind::L1 };
        let a = minority_score(&[5.0], &oracle, &s, &params, 11).unwrap();
        let b = minority_score(&[5.0], &oracle, &s, &params, 11).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let batch = minority_scores(&data, &oracle, &s, &params, 11).unwrap();
        assert_eq!(batch, minority_scores(&data, &oracle, &s, &params, 11).unwrap());
        assert!(batch.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn invalid_arguments() {
        let s = NoiseSchedule::linear(10, 0.05, 0.1).unwrap();
        let params = MinorityParams { t: 11, draws: 1, distance: DistanceKind::L2 };
        assert!(minority_score(&[0.0], &Zero(1), &s, &params, 0).is_err());
        let params = MinorityParams { t: 5, draws: 0, distance: DistanceKind::L2 };
        assert!(minority_score(&[0.0], &Zero(1), &s, &params, 0).is_err());
        let defaults = MinorityParams::defaults_for(&NoiseSchedule::default_linear());
        assert_eq!(defaults.t, 900);
        assert_eq!(defaults.draws, 1);
    }
}
