//! Cluster extraction, modularity and k-means post-clustering.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{closest_center, squared_distance, EmbeddingState, Matrix};
use crate::rng::{stream_rng, Stream};

/// Hard node-to-cluster assignment; ids lie in `0..cluster_count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub assignment: Vec<usize>,
    pub cluster_count: usize,
}

impl ClusterAssignment {
    pub fn new(assignment: Vec<usize>, cluster_count: usize) -> Result<Self> {
        if let Some(&bad) = assignment.iter().find(|&&c| c >= cluster_count) {
            return Err(Error::invalid(format!(
                "cluster id {bad} >= cluster count {cluster_count}"
            )));
        }
        Ok(Self {
            assignment,
            cluster_count,
        })
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.cluster_count];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

pub fn assign_clusters(state: &EmbeddingState) -> ClusterAssignment {
    let assignment = (0..state.node_count()).map(|v| closest_center(state, v).0).collect();
    ClusterAssignment {
        assignment,
        cluster_count: state.cluster_count(),
    }
}

/// Newman–Girvan modularity of a hard partition:
/// `Q = Σ_c [ L_c / m - (D_c / 2m)^2 ]` with `L_c` the intra-community edge
/// count and `D_c` the community degree sum.
pub fn modularity(g: &Graph, a: &ClusterAssignment) -> Result<f64> {
    if a.len() != g.node_count() {
        return Err(Error::ShapeMismatch(format!(
            "assignment covers {} nodes, graph has {}",
            a.len(),
            g.node_count()
        )));
    }
    let m = g.edge_count() as f64;
    if m == 0.0 {
        return Err(Error::invalid("modularity is undefined for a graph without edges"));
    }
    let mut internal = vec![0usize; a.cluster_count];
    let mut degree = vec![0usize; a.cluster_count];
    for v in 0..g.node_count() {
        degree[a.assignment[v]] += g.degree(v);
    }
    for (u, v) in g.edges() {
        if a.assignment[u] == a.assignment[v] {
            internal[a.assignment[u]] += 1;
        }
    }
    Ok(internal
        .iter()
        .zip(&degree)
        .map(|(&l, &d)| l as f64 / m - (d as f64 / (2.0 * m)).powi(2))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignment: ClusterAssignment,
    pub centers: Matrix,
    pub wcss: f64,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub history: Vec<f64>,
}

fn nearest(point: &[f64], centers: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.rows() {
        let d = squared_distance(point, centers.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_seeds<R: Rng>(points: &Matrix, k: usize, rng: &mut R) -> Matrix {
    let n = points.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.row(i), points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive mass")
        } else {
            // all remaining points coincide with a chosen center
            (0..n).find(|i| !chosen.contains(i)).expect("n >= k")
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(points.row(i), points.row(next)));
        }
    }
    let mut centers = Matrix::zeros(k, points.cols());
    for (c, &i) in chosen.iter().enumerate() {
        centers.row_mut(c).copy_from_slice(points.row(i));
    }
    centers
}

/// Lloyd's algorithm from k-means++ seeds. Empty clusters are re-seeded at
/// the point farthest from its assigned center.
pub fn kmeans(points: &Matrix, k: usize, max_iter: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.rows();
    if k < 1 || n < k {
        return Err(Error::invalid(format!("k-means needs 1 <= k <= n, got k={k}, n={n}")));
    }
    let d = points.cols();
    let mut rng = stream_rng(seed, Stream::KMeans, k as u64, n as u64);
    let mut centers = plus_plus_seeds(points, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();

    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut cost = vec![0.0; n];
        for i in 0..n {
            let (c, dist) = nearest(points.row(i), &centers);
            cost[i] = dist;
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }

        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, x) in sums.row_mut(labels[i]).iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        let mut wcss = 0.0;
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let inv = 1.0 / count as f64;
                for (m, s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *m = s * inv;
                }
            }
        }
        for i in 0..n {
            let dist = squared_distance(points.row(i), centers.row(labels[i]));
            cost[i] = dist;
            wcss += dist;
        }
        history.push(wcss);

        let mut reseeded = false;
        for (c, &count) in counts.iter().enumerate() {
            if count == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(b.cmp(&a)))
                    .expect("nonempty");
                centers.row_mut(c).copy_from_slice(points.row(far));
                cost[far] = 0.0;
                reseeded = true;
            }
        }
        if !changed && !reseeded {
            break;
        }
    }

    // final assignment against the final centers
    let mut wcss = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let (c, dist) = nearest(points.row(i), &centers);
        *label = c;
        wcss += dist;
    }
    if wcss < *history.last().unwrap_or(&f64::INFINITY) {
        history.push(wcss);
    }
    Ok(KMeansResult {
        assignment: ClusterAssignment {
            assignment: labels,
            cluster_count: k,
        },
        centers,
        wcss,
        history,
    })
}

/// Best-of-`restarts` k-means by WCSS; restart `r` uses seed `seed + r`.
pub fn kmeans_restarts(points: &Matrix, k: usize, max_iter: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let run = kmeans(points, k, max_iter, seed.wrapping_add(r as u64))?;
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Sample mean and twice the sample standard deviation.
pub fn mean_and_two_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 2.0 * var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::erdos_renyi;

    fn two_triangles() -> Graph {
        Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
            .unwrap()
            .0
    }

    #[test]
    fn single_community_has_zero_modularity() {
        let g = erdos_renyi(60, 5.0, 1).unwrap();
        let a = ClusterAssignment::new(vec![0; 60], 1).unwrap();
        assert_eq!(modularity(&g, &a).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_triangles() {
        let a = ClusterAssignment::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        assert!((modularity(&two_triangles(), &a).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn modularity_rejects_size_mismatch() {
        let a = ClusterAssignment::new(vec![0, 0], 1).unwrap();
        assert!(modularity(&two_triangles(), &a).is_err());
        assert!(ClusterAssignment::new(vec![0, 3], 2).is_err());
    }

    #[test]
    fn modularity_ignores_label_names() {
        let g = erdos_renyi(100, 6.0, 4).unwrap();
        let labels: Vec<usize> = (0..100).map(|v| (v * 7) % 5).collect();
        let a = ClusterAssignment::new(labels.clone(), 5).unwrap();
        let perm = [3, 0, 4, 1, 2];
        let b = ClusterAssignment::new(labels.iter().map(|&c| perm[c]).collect(), 5).unwrap();
        assert!((modularity(&g, &a).unwrap() - modularity(&g, &b).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn random_assignment_on_random_graph_is_near_zero() {
        let mut total = 0.0;
        for seed in 0..10 {
            let g = erdos_renyi(1000, 20.0, seed).unwrap();
            let mut rng = stream_rng(seed, Stream::KMeans, 99, 0);
            let labels = (0..1000).map(|_| rng.random_range(0..20)).collect();
            total += modularity(&g, &ClusterAssignment::new(labels, 20).unwrap()).unwrap();
        }
        assert!((total / 10.0).abs() < 0.02);
    }

    #[test]
    fn assignment_reports_empty_clusters() {
        let f = Matrix::from_rows(&[vec![0.0], vec![0.1]]).unwrap();
        let mu = Matrix::from_rows(&[vec![0.0], vec![50.0]]).unwrap();
        let s = EmbeddingState::from_parameters(f, mu).unwrap();
        let a = assign_clusters(&s);
        assert_eq!(a.cluster_count, 2);
        assert_eq!(a.cluster_sizes(), vec![2, 0]);
    }

    #[test]
    fn kmeans_with_k_equal_n() {
        let pts = Matrix::from_rows(&[vec![0.0, 1.0], vec![3.0, 1.0], vec![-2.0, 5.0]]).unwrap();
        let r = kmeans(&pts, 3, 50, 0).unwrap();
        assert_eq!(r.wcss, 0.0);
        let mut labels = r.assignment.assignment.clone();
        labels.sort_unstable();
        assert_eq!(labels, vec![0, 1, 2]);
    }

    #[test]
    fn kmeans_with_one_cluster_finds_mean() {
        let pts = Matrix::from_rows(&[vec![0.0, 1.0], vec![3.0, 1.0], vec![-2.0, 4.0]]).unwrap();
        let r = kmeans(&pts, 1, 50, 0).unwrap();
        assert!((r.centers.row(0)[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.centers.row(0)[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_unit_square() {
        let pts = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let best = kmeans_restarts(&pts, 2, 100, 3, 10).unwrap();
        assert!((best.wcss - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_rejects_too_few_points() {
        let pts = Matrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(kmeans(&pts, 2, 10, 0).is_err());
        assert!(kmeans(&pts, 0, 10, 0).is_err());
    }

    #[test]
    fn kmeans_handles_duplicate_points() {
        let pts = Matrix::from_rows(&vec![vec![1.0, 1.0]; 5]).unwrap();
        let r = kmeans(&pts, 3, 10, 0).unwrap();
        assert_eq!(r.wcss, 0.0);
    }

    #[test]
    fn two_std_summary() {
        let (m, s) = mean_and_two_std(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-15 && (s - 2.0).abs() < 1e-15);
        assert_eq!(mean_and_two_std(&[4.0]), (4.0, 0.0));
    }
}
