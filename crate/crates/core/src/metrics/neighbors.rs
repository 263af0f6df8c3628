use rayon::prelude::*;

use crate::diffusion::SampleBatch;
use crate::error::{check_dim, Error, Result};

/// Floor on the mean reachability distance; keeps densities finite on duplicates.
pub const LOF_EPSILON: f64 = 1e-12;

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One neighbor: `(distance, index)`.
pub type Neighbor = (f64, usize);

/// The `k` nearest rows of `pool` to `query`, ordered by distance then index.
pub fn nearest(pool: &SampleBatch, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = pool
        .rows()
        .enumerate()
        .filter(|(j, _)| Some(*j) != exclude)
        .map(|(j, row)| (euclidean(query, row), j))
        .collect();
    let cmp = |a: &Neighbor, b: &Neighbor| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < all.len() {
        all.select_nth_unstable_by(k, cmp);
        all.truncate(k);
    }
    all.sort_unstable_by(cmp);
    all
}

/// k-nearest-neighbor lists of every row within its own set (self excluded).
pub fn knn_graph(points: &SampleBatch, k: usize) -> Result<Vec<Vec<Neighbor>>> {
    check_k(k, points.len())?;
    Ok((0..points.len())
        .into_par_iter()
        .map(|i| nearest(points, points.row(i), k, Some(i)))
        .collect())
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("need 1 <= k < n, got k = {k}, n = {n}")));
    }
    Ok(())
}

fn mean_distance(neighbors: &[Neighbor]) -> f64 {
    neighbors.iter().map(|(d, _)| d).sum::<f64>() / neighbors.len() as f64
}

/// Mean Euclidean distance from each point to its `k` nearest neighbors (self excluded).
pub fn avg_knn(points: &SampleBatch, k: usize) -> Result<Vec<f64>> {
    Ok(knn_graph(points, k)?.iter().map(|n| mean_distance(n)).collect())
}

/// Mean distance from each query to its `k` nearest rows of `reference`.
pub fn avg_knn_against(reference: &SampleBatch, queries: &SampleBatch, k: usize) -> Result<Vec<f64>> {
    check_dim(reference.dim(), queries.dim())?;
    if k == 0 || k > reference.len() {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds reference size {}", reference.len())));
    }
    Ok((0..queries.len())
        .into_par_iter()
        .map(|i| mean_distance(&nearest(reference, queries.row(i), k, None)))
        .collect())
}

struct Density {
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
}

fn local_reachability(neighbors: &[Neighbor], k_distance: &[f64]) -> f64 {
    let reach: f64 = neighbors.iter().map(|&(d, j)| k_distance[j].max(d)).sum::<f64>()
        / neighbors.len() as f64;
    1.0 / reach.max(LOF_EPSILON)
}

fn density(graph: &[Vec<Neighbor>]) -> Density {
    let k_distance: Vec<f64> = graph.iter().map(|n| n.last().unwrap().0).collect();
    let lrd = graph.iter().map(|n| local_reachability(n, &k_distance)).collect();
    Density { k_distance, lrd }
}

fn outlier_factor(neighbors: &[Neighbor], own_lrd: f64, lrd: &[f64]) -> f64 {
    neighbors.iter().map(|&(_, j)| lrd[j] / own_lrd).sum::<f64>() / neighbors.len() as f64
}

/// Local Outlier Factor of every point within its own set.
///
/// Uses exactly `k` neighbors (distance ties broken by index) and floors the
/// mean reachability distance at [`LOF_EPSILON`], so a set of identical
/// points scores 1 everywhere.
pub fn lof(points: &SampleBatch, k: usize) -> Result<Vec<f64>> {
    let graph = knn_graph(points, k)?;
    let dens = density(&graph);
    Ok(graph
        .iter()
        .zip(&dens.lrd)
        .map(|(n, &own)| outlier_factor(n, own, &dens.lrd))
        .collect())
}

/// LOF of new points relative to a reference set.
///
/// Reference densities are computed within the reference; each query takes
/// its `k` nearest reference rows as neighbors.
pub fn lof_against(reference: &SampleBatch, queries: &SampleBatch, k: usize) -> Result<Vec<f64>> {
    check_dim(reference.dim(), queries.dim())?;
    let graph = knn_graph(reference, k)?;
    let dens = density(&graph);
    Ok((0..queries.len())
        .into_par_iter()
        .map(|i| {
            let n = nearest(reference, queries.row(i), k, None);
            let own = local_reachability(&n, &dens.k_distance);
            outlier_factor(&n, own, &dens.lrd)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
}

fn coverage(balls: &SampleBatch, radii: &[f64], probes: &SampleBatch) -> f64 {
    let inside = (0..probes.len())
        .into_par_iter()
        .filter(|&i| {
            let p = probes.row(i);
            balls.rows().zip(radii).any(|(c, &r)| euclidean(p, c) <= r)
        })
        .count();
    inside as f64 / probes.len() as f64
}

/// Manifold-ball precision and recall.
///
/// Each real point owns a ball whose radius is its distance to the `k`-th
/// nearest other real point; precision is the fraction of generated points
/// inside some real ball. Recall swaps the roles of the two sets.
pub fn improved_precision_recall(
    real: &SampleBatch,
    generated: &SampleBatch,
    k: usize,
) -> Result<PrecisionRecall> {
    check_dim(real.dim(), generated.dim())?;
    let real_radii: Vec<f64> = knn_graph(real, k)?.iter().map(|n| n.last().unwrap().0).collect();
    let gen_radii: Vec<f64> = knn_graph(generated, k)?.iter().map(|n| n.last().unwrap().0).collect();
    Ok(PrecisionRecall {
        precision: coverage(real, &real_radii, generated),
        recall: coverage(generated, &gen_radii, real),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> SampleBatch {
        SampleBatch::new(1, xs.to_vec()).unwrap()
    }

    #[test]
    fn avg_knn_examples() {
        assert_eq!(avg_knn(&line(&[0.0, 1.0, 3.0]), 2).unwrap(), vec![2.0, 1.5, 2.5]);
        assert_eq!(avg_knn(&line(&[0.0, 5.0, 6.0]), 1).unwrap(), vec![5.0, 1.0, 1.0]);
        assert_eq!(avg_knn(&line(&[2.0; 4]), 2).unwrap(), vec![0.0; 4]);
        assert!(avg_knn(&line(&[0.0, 1.0]), 2).is_err());
        assert!(avg_knn(&line(&[0.0, 1.0]), 0).is_err());
    }

    #[test]
    fn lof_of_identical_points_is_one() {
        let p = SampleBatch::new(2, vec![1.0; 20]).unwrap();
        assert_eq!(lof(&p, 3).unwrap(), vec![1.0; 10]);
    }

    #[test]
    fn ties_broken_by_index() {
        let n = nearest(&line(&[1.0, -1.0, 1.0, 3.0]), &[0.0], 3, None);
        assert_eq!(n.iter().map(|x| x.1).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn precision_recall_extremes() {
        let real = SampleBatch::new(2, (0..20).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let pr = improved_precision_recall(&real, &real, 3).unwrap();
        assert_eq!(pr, PrecisionRecall { precision: 1.0, recall: 1.0 });
        let far = SampleBatch::new(2, real.as_slice().iter().map(|v| v + 100.0).collect()).unwrap();
        let pr = improved_precision_recall(&real, &far, 3).unwrap();
        assert_eq!(pr.precision, 0.0);
        assert!(improved_precision_recall(&real, &line(&[0.0; 5]), 3).is_err());
    }

    #[test]
    fn query_lof_of_reference_member_matches_neighborhood() {
        let reference = SampleBatch::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let q = SampleBatch::new(2, vec![0.5, 0.5, 10.0, 10.0]).unwrap();
        let scores = lof_against(&reference, &q, 2).unwrap();
        assert!(scores[0] <= 1.0 + 1e-12);
        assert!(scores[1] > 5.0);
        let avg = avg_knn_against(&reference, &q, 4).unwrap();
        assert!((avg[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(avg_knn_against(&reference, &q, 5).is_err());
    }
}
