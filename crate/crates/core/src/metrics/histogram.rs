use crate::error::{check_finite, Error, Result};

/// Equal-width histogram normalized to unit area.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub densities: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }
}

/// Histogram over `[min, max]`; a constant input gets unit-width bins centered on it.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Empty("histogram values"));
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("bin count must be positive".into()));
    }
    check_finite(values, "histogram values")?;
    let mut lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        lo -= 0.5 * bins as f64;
        hi += 0.5 * bins as f64;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let norm = values.len() as f64 * width;
    let densities = counts.iter().map(|&c| c as f64 / norm).collect();
    Ok(Histogram { edges, densities })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value() {
        let h = histogram(&[3.0], 1).unwrap();
        assert_eq!(h.edges, vec![2.5, 3.5]);
        assert_eq!(h.densities, vec![1.0]);
    }

    #[test]
    fn unit_area() {
        let values: Vec<f64> = (0..97).map(|i| ((i * 31) % 17) as f64 * 0.3).collect();
        for bins in [1, 3, 10, 50] {
            let h = histogram(&values, bins).unwrap();
            let area: f64 = h.densities.iter().map(|d| d * h.bin_width()).sum();
            assert!((area - 1.0).abs() < 1e-12);
            assert_eq!(h.edges.len(), bins + 1);
        }
    }

    #[test]
    fn errors() {
        assert!(histogram(&[], 3).is_err());
        assert!(histogram(&[1.0], 0).is_err());
    }
}
