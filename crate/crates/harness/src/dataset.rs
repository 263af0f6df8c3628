//! Synthetic mixture datasets with retained mode labels.

use minority_core::diffusion::SampleBatch;
use minority_core::rng::stream_rng;
use minority_core::score::GmmSpec;

use crate::error::{HarnessError, Result};

/// Draws from a mixture together with the component each draw came from.
///
/// The mode labels are for evaluation only; no training path reads them.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBatch {
    pub data: SampleBatch,
    pub modes: Vec<usize>,
}

/// `count` i.i.d. mixture draws; draw `i` uses `stream_rng(seed, i)`.
pub fn synth_dataset(spec: &GmmSpec, count: usize, seed: u64) -> Result<LabeledBatch> {
    if count == 0 {
        return Err(HarnessError::Validation { stage: "synth", message: "sample count must be at least 1".into() });
    }
    let mut data = Vec::with_capacity(count * spec.dim());
    let mut modes = Vec::with_capacity(count);
    for i in 0..count {
        let (x, k) = spec.sample(&mut stream_rng(seed, i as u64));
        data.extend(x);
        modes.push(k);
    }
    Ok(LabeledBatch { data: SampleBatch::new(spec.dim(), data)?, modes })
}

/// Index of the lowest-weight component (first on ties).
pub fn minority_mode(spec: &GmmSpec) -> usize {
    spec.components()
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (k, c)| if c.weight < best.1 { (k, c.weight) } else { best })
        .0
}

/// Most probable component of each point under the clean mixture.
pub fn assign_modes(spec: &GmmSpec, points: &SampleBatch) -> Vec<usize> {
    let d = spec.dim() as f64;
    points
        .rows()
        .map(|x| {
            spec.components()
                .iter()
                .map(|c| {
                    let v = c.variance.max(1e-12);
                    let sq: f64 = x.iter().zip(&c.mean).map(|(x, m)| (x - m).powi(2)).sum();
                    c.weight.ln() - 0.5 * d * v.ln() - sq / (2.0 * v)
                })
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best })
                .0
        })
        .collect()
}

/// Fraction of points assigned to `mode`.
pub fn mode_fraction(spec: &GmmSpec, points: &SampleBatch, mode: usize) -> f64 {
    let modes = assign_modes(spec, points);
    modes.iter().filter(|&&m| m == mode).count() as f64 / modes.len().max(1) as f64
}
