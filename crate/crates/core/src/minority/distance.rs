use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::rng::stream_rng;

/// Distance used to compare a sample with its reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceKind {
    L1,
    L2,
    /// L2 after a fixed Gaussian random projection to `width` coordinates,
    /// scaled by `1 / sqrt(width)`; the projection is regenerated from `seed`.
    Feature { width: usize, seed: u64 },
}

impl DistanceKind {
    pub fn name(&self) -> &'static str {
        match self {
            DistanceKind::L1 => "l1",
            DistanceKind::L2 => "l2",
            DistanceKind::Feature { .. } => "feature",
        }
    }
}

pub fn distance(a: &[f64], b: &[f64], kind: &DistanceKind) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    let diff = a.iter().zip(b).map(|(x, y)| x - y);
    Ok(match kind {
        DistanceKind::L1 => diff.map(f64::abs).sum(),
        DistanceKind::L2 => diff.map(|d| d * d).sum::<f64>().sqrt(),
        DistanceKind::Feature { width, seed } => {
            if *width == 0 {
                return Err(Error::InvalidParameter("feature width must be positive".into()));
            }
            let diff: Vec<f64> = diff.collect();
            // projection is linear, so project the difference directly
            let mut rng = stream_rng(*seed, a.len() as u64);
            let scale = 1.0 / (*width as f64).sqrt();
            let mut sq = 0.0;
            for _ in 0..*width {
                let f: f64 = diff
                    .iter()
                    .map(|d| {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        g * d
                    })
                    .sum();
                sq += (f * scale).powi(2);
            }
            sq.sqrt()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0], &DistanceKind::L2).unwrap(), 5.0);
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0], &DistanceKind::L1).unwrap(), 7.0);
        let f = DistanceKind::Feature { width: 16, seed: 4 };
        for k in [DistanceKind::L1, DistanceKind::L2, f.clone()] {
            assert_eq!(distance(&[1.0, 2.0], &[1.0, 2.0], &k).unwrap(), 0.0);
        }
        let ab = distance(&[1.0, 2.0], &[-1.0, 0.5], &f).unwrap();
        let ba = distance(&[-1.0, 0.5], &[1.0, 2.0], &f).unwrap();
        assert!((ab - ba).abs() < 1e-12 && ab > 0.0);
        assert!(distance(&[1.0], &[1.0, 2.0], &DistanceKind::L2).is_err());
        assert!(distance(&[1.0], &[2.0], &DistanceKind::Feature { width: 0, seed: 0 }).is_err());
    }
}
