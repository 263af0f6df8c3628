//! Neighborhood-density and fidelity metrics on raw coordinates.

mod histogram;
mod neighbors;

pub use histogram::{histogram, Histogram};
pub use neighbors::{
    avg_knn, avg_knn_against, euclidean, improved_precision_recall, knn_graph, lof, lof_against,
    nearest, Neighbor, PrecisionRecall, LOF_EPSILON,
};

use crate::diffusion::SampleBatch;
use crate::error::Result;

pub const DEFAULT_K_AVGKNN: usize = 5;
pub const DEFAULT_K_LOF: usize = 20;
pub const DEFAULT_K_PRECISION: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricParams {
    pub k_avgknn: usize,
    pub k_lof: usize,
    pub k_precision: usize,
    pub histogram_bins: usize,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            k_avgknn: DEFAULT_K_AVGKNN,
            k_lof: DEFAULT_K_LOF,
            k_precision: DEFAULT_K_PRECISION,
            histogram_bins: 40,
        }
    }
}

/// Metrics of a generated batch measured against real data.
///
/// `avg_knn` and `lof` place every generated point among the real points, so
/// higher values mean the sample sits in a sparser region of the data.
/// `histogram` bins the LOF values.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub avg_knn: Vec<f64>,
    pub lof: Vec<f64>,
    pub precision: f64,
    pub recall: f64,
    pub histogram: Histogram,
}

impl MetricReport {
    pub fn evaluate(real: &SampleBatch, generated: &SampleBatch, params: &MetricParams) -> Result<Self> {
        let avg_knn = avg_knn_against(real, generated, params.k_avgknn)?;
        let lof = lof_against(real, generated, params.k_lof)?;
        let pr = improved_precision_recall(real, generated, params.k_precision)?;
        let histogram = histogram(&lof, params.histogram_bins)?;
        Ok(Self { avg_knn, lof, precision: pr.precision, recall: pr.recall, histogram })
    }
}
