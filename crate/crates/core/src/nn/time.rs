use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Noise-conditioning features for step `t` of `T`.
///
/// The first coordinate is `t / T`; the remaining `width - 1` coordinates
/// alternate `sin` and `cos` of `2^k * pi * t / T` for `k = 0, 1, ...`.
pub fn time_features(t: usize, total_steps: usize, width: usize) -> Result<Vec<f64>> {
    if t == 0 || t > total_steps {
        return Err(Error::StepOutOfRange { t, total: total_steps });
    }
    if width == 0 {
        return Err(Error::InvalidParameter("time feature width must be positive".into()));
    }
    let s = t as f64 / total_steps as f64;
    let mut out = Vec::with_capacity(width);
    out.push(s);
    for j in 1..width {
        let freq = (1u64 << ((j - 1) / 2).min(52)) as f64 * PI;
        out.push(if j % 2 == 1 { (freq * s).sin() } else { (freq * s).cos() });
    }
    Ok(out)
}
