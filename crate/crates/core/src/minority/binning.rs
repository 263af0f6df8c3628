use crate::error::{check_finite, Error, Result};

/// Raw minority score of one sample with its ordinal class.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorityRecord {
    pub sample_index: usize,
    pub raw_score: f64,
    pub ordinal_class: usize,
}

impl MinorityRecord {
    pub fn zip(scores: &[f64], labels: &[usize]) -> Vec<Self> {
        scores
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (&raw_score, &ordinal_class))| Self { sample_index: i, raw_score, ordinal_class })
            .collect()
    }
}

/// `L` quantile classes of raw minority scores.
///
/// `edges[c]` is the largest score in class `c`, so a score equal to an edge
/// belongs to the lower class. `representatives[c]` is the mean score of class
/// `c`. With tied scores straddling a class boundary, consecutive edges can
/// coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalBinning {
    edges: Vec<f64>,
    representatives: Vec<f64>,
}

impl OrdinalBinning {
    pub fn new(edges: Vec<f64>, representatives: Vec<f64>) -> Result<Self> {
        if representatives.is_empty() || edges.len() + 1 != representatives.len() {
            return Err(Error::InvalidParameter(format!(
                "{} edges do not separate {} classes",
                edges.len(),
                representatives.len()
            )));
        }
        check_finite(&edges, "binning edges")?;
        check_finite(&representatives, "binning representatives")?;
        if edges.windows(2).any(|w| w[0] > w[1]) || representatives.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("binning edges and representatives must ascend".into()));
        }
        Ok(Self { edges, representatives })
    }

    pub fn class_count(&self) -> usize {
        self.representatives.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn representatives(&self) -> &[f64] {
        &self.representatives
    }

    /// Class of a new raw score: the number of edges strictly below it.
    pub fn classify(&self, score: f64) -> usize {
        self.edges.iter().filter(|e| **e < score).count()
    }
}

/// Splits scores into `L` quantile classes of near-equal size.
///
/// Samples are ranked by score with ties kept in original order; rank `r`
/// goes to class `floor(r L / n)`, so class sizes differ by at most one and
/// class 0 holds the lowest scores.
pub fn quantile_bins(scores: &[f64], class_count: usize) -> Result<(OrdinalBinning, Vec<usize>)> {
    if scores.is_empty() {
        return Err(Error::Empty("minority scores"));
    }
    check_finite(scores, "minority scores")?;
    if class_count == 0 || class_count > scores.len() {
        return Err(Error::InvalidParameter(format!(
            "class count {class_count} must lie in 1..={}",
            scores.len()
        )));
    }
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut labels = vec![0; n];
    let mut sums = vec![0.0; class_count];
    let mut counts = vec![0usize; class_count];
    let mut maxima = vec![f64::NEG_INFINITY; class_count];
    for (rank, &i) in order.iter().enumerate() {
        let c = rank * class_count / n;
        labels[i] = c;
        sums[c] += scores[i];
        counts[c] += 1;
        maxima[c] = maxima[c].max(scores[i]);
    }
    let representatives = sums.iter().zip(&counts).map(|(s, c)| s / *c as f64).collect();
    let edges = maxima[..class_count - 1].to_vec();
    Ok((OrdinalBinning::new(edges, representatives)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_split() {
        let scores: Vec<f64> = (1..=10).map(f64::from).collect();
        let (b, labels) = quantile_bins(&scores, 2).unwrap();
        assert_eq!(labels, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(b.representatives(), &[3.0, 8.0]);
        assert_eq!(b.edges(), &[5.0]);
        assert_eq!(b.classify(5.0), 0);
        assert_eq!(b.classify(5.5), 1);
    }

    #[test]
    fn single_class() {
        let (b, labels) = quantile_bins(&[3.0, 1.0, 2.0], 1).unwrap();
        assert_eq!(labels, vec![0, 0, 0]);
        assert!(b.edges().is_empty());
        assert_eq!(b.representatives(), &[2.0]);
    }

    #[test]
    fn unsorted_input_and_uneven_sizes() {
        let scores = [0.9, 0.1, 0.5, 0.7, 0.3, 0.2, 0.8];
        let (b, labels) = quantile_bins(&scores, 3).unwrap();
        // ranks: 0.1,0.2,0.3 | 0.5,0.7 | 0.8,0.9
        assert_eq!(labels, vec![2, 0, 1, 1, 0, 0, 2]);
        let mut sizes = [0; 3];
        labels.iter().for_each(|&l| sizes[l] += 1);
        assert_eq!(sizes, [3, 2, 2]);
        assert_eq!(b.edges(), &[0.3, 0.7]);
    }

    #[test]
    fn ties_keep_original_order() {
        let (_, labels) = quantile_bins(&[1.0, 1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn errors() {
        assert!(quantile_bins(&[], 1).is_err());
        assert!(quantile_bins(&[1.0, 2.0], 3).is_err());
        assert!(quantile_bins(&[1.0, 2.0], 0).is_err());
        assert!(quantile_bins(&[1.0, f64::NAN], 1).is_err());
        assert!(OrdinalBinning::new(vec![1.0, 2.0], vec![0.5]).is_err());
        assert!(OrdinalBinning::new(vec![2.0], vec![3.0, 1.0]).is_err());
    }

    #[test]
    fn records() {
        let r = MinorityRecord::zip(&[0.5, 0.1], &[1, 0]);
        assert_eq!(r[1], MinorityRecord { sample_index: 1, raw_score: 0.1, ordinal_class: 0 });
    }
}
