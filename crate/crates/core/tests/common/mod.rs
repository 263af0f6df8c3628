#![allow(dead_code)]

use minority_core::diffusion::SampleBatch;
use minority_core::rng::stream_rng;
use minority_core::score::{GmmComponent, GmmSpec};
use rand::Rng;

/// Central finite-difference gradient of `f` at `x`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

pub fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn random_batch(seed: u64, n: usize, dim: usize, scale: f64) -> SampleBatch {
    let mut rng = stream_rng(seed, 99);
    SampleBatch::new(dim, random_vec(&mut rng, n * dim, scale)).unwrap()
}

/// Two-mode 2-D mixture: 95% at the origin, 5% at (2, 2).
pub fn imbalanced_gmm() -> GmmSpec {
    GmmSpec::new(vec![
        GmmComponent { weight: 0.95, mean: vec![0.0, 0.0], variance: 0.25 },
        GmmComponent { weight: 0.05, mean: vec![2.0, 2.0], variance: 0.0625 },
    ])
    .unwrap()
}

pub fn draw(gmm: &GmmSpec, n: usize, seed: u64) -> (SampleBatch, Vec<usize>) {
    let mut rng = stream_rng(seed, 0);
    let mut data = Vec::with_capacity(n * gmm.dim());
    let mut modes = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, k) = gmm.sample(&mut rng);
        data.extend(x);
        modes.push(k);
    }
    (SampleBatch::new(gmm.dim(), data).unwrap(), modes)
}
