//! Independent oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use gemsec_core::eval::ClusterAssignment;
use gemsec_core::graph::{compute_edge_weights, load_edge_list, EdgeListFormat, Graph, LoadedGraph};
use gemsec_core::model::{full_loss, grad_centers, grad_node, EmbeddingState, Matrix, NoiseDraws, Objective};
use gemsec_core::walk::{extract_features, first_order_walk, WalkContextBatch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn karate() -> LoadedGraph {
    load_edge_list(data_path("karate.csv"), EdgeListFormat::Auto).unwrap()
}

/// Faction labels indexed by internal node id.
pub fn karate_factions(loaded: &LoadedGraph) -> ClusterAssignment {
    let text = std::fs::read_to_string(data_path("karate_factions.csv")).unwrap();
    let ids = loaded.id_map();
    let mut labels = vec![usize::MAX; loaded.graph.node_count()];
    for line in text.lines().skip(1) {
        let (id, faction) = line.split_once(',').unwrap();
        labels[ids[&id.trim().parse::<i64>().unwrap()]] = faction.trim().parse().unwrap();
    }
    assert!(labels.iter().all(|&l| l != usize::MAX));
    ClusterAssignment::new(labels, 2).unwrap()
}

/// Newman's Q straight from the definition, summing over all ordered node
/// pairs of a dense adjacency matrix.
pub fn brute_force_modularity(g: &Graph, labels: &[usize]) -> f64 {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for (u, v) in g.edges() {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// `-log σ(x)` evaluated naively; fine for moderate arguments.
pub fn neg_log_sigmoid(x: f64) -> f64 {
    -(1.0 / (1.0 + (-x).exp())).ln()
}

/// Scalar negative-sampling loss, averaged over pairs.
pub fn scalar_nce(f: &[Vec<f64>], pairs: &[(usize, usize)], draws: &[Vec<usize>]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut total = 0.0;
    for (&(v, n), noise) in pairs.iter().zip(draws) {
        total += neg_log_sigmoid(dot(&f[n], &f[v]));
        for &u in noise {
            total += neg_log_sigmoid(-dot(&f[u], &f[v]));
        }
    }
    total / pairs.len() as f64
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One random objective instance: graph, parameters, a walk batch and
/// frozen noise draws.
pub struct Instance {
    pub graph: Graph,
    pub state: EmbeddingState,
    pub batch: WalkContextBatch,
    pub draws: NoiseDraws,
    pub gamma: f64,
    pub lambda: f64,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let n = rng.random_range(3..=10);
        let d = rng.random_range(1..=4);
        let c = rng.random_range(1..=3);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(0.5) {
                    edges.push((u, v));
                }
            }
        }
        edges.push((0, 1));
        edges.push((1, 2));
        let graph = Graph::from_edges(n, &edges).unwrap().0;
        let mut draw = |rows: usize| {
            let data: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            Matrix::from_rows(&data).unwrap()
        };
        let f = draw(n);
        let mu = draw(c);
        let state = EmbeddingState::from_parameters(f, mu).unwrap();
        let length = rng.random_range(2..=6);
        let walk = first_order_walk(&graph, rng.random_range(0..3), length, rng).unwrap();
        let batch = extract_features(&walk, rng.random_range(1..=3));
        let k = rng.random_range(1..=3);
        let draws: Vec<usize> = batch
            .pairs
            .iter()
            .flat_map(|&(v, _)| (0..k).map(move |_| v))
            .map(|v| loop {
                let u = rng.random_range(0..n);
                if u != v {
                    break u;
                }
            })
            .collect();
        let draws = NoiseDraws::from_draws(k, draws).unwrap();
        Self {
            graph,
            state,
            batch,
            draws,
            gamma: rng.random_range(0.05..1.0),
            lambda: rng.random_range(0.0..1.0),
        }
    }

    /// True when the loss is not differentiable within `margin` of the
    /// current point: a node near a center, a near-tie between centers, or
    /// coinciding endpoints of a traversed edge.
    pub fn near_singular(&self, margin: f64) -> bool {
        let f = &self.state.embeddings;
        let mu = &self.state.centers;
        for v in self.batch.nodes() {
            let mut ds: Vec<f64> = (0..mu.rows()).map(|c| dist(f.row(v), mu.row(c))).collect();
            ds.sort_by(f64::total_cmp);
            if ds[0] < margin || (ds.len() > 1 && ds[1] - ds[0] < margin) {
                return true;
            }
        }
        self.batch
            .traversed_edges
            .iter()
            .any(|&(a, b)| dist(f.row(a), f.row(b)) < margin)
    }

    fn loss_with(&self, state: &EmbeddingState) -> f64 {
        let w = compute_edge_weights(&self.graph);
        let obj = Objective {
            gamma: self.gamma,
            lambda: self.lambda,
            weights: Some(&w),
        };
        full_loss(state, &self.batch, &self.draws, &obj).unwrap()
    }

    /// Largest relative error between analytic gradients and central
    /// differences over every node row and the center matrix.
    pub fn max_gradient_error(&self, h: f64) -> f64 {
        let w = compute_edge_weights(&self.graph);
        let obj = Objective {
            gamma: self.gamma,
            lambda: self.lambda,
            weights: Some(&w),
        };
        let (n, d) = (self.state.node_count(), self.state.dims());
        let mut worst: f64 = 0.0;
        for v in 0..n {
            let analytic = grad_node(&self.state, v, &self.batch, &self.draws, &obj).unwrap();
            let numeric: Vec<f64> = (0..d)
                .map(|i| {
                    let mut plus = self.state.clone();
                    plus.embeddings.row_mut(v)[i] += h;
                    let mut minus = self.state.clone();
                    minus.embeddings.row_mut(v)[i] -= h;
                    (self.loss_with(&plus) - self.loss_with(&minus)) / (2.0 * h)
                })
                .collect();
            worst = worst.max(relative_error(&analytic, &numeric));
        }
        let analytic = grad_centers(&self.state, &self.batch.nodes(), self.gamma);
        for c in 0..self.state.cluster_count() {
            let numeric: Vec<f64> = (0..d)
                .map(|i| {
                    let mut plus = self.state.clone();
                    plus.centers.row_mut(c)[i] += h;
                    let mut minus = self.state.clone();
                    minus.centers.row_mut(c)[i] -= h;
                    (self.loss_with(&plus) - self.loss_with(&minus)) / (2.0 * h)
                })
                .collect();
            worst = worst.max(relative_error(analytic.row(c), &numeric));
        }
        worst
    }
}

/// `‖a - b‖ / max(‖a‖, ‖b‖)`, or the absolute difference when both are tiny.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale < 1e-8 {
        norm(&diff)
    } else {
        norm(&diff) / scale
    }
}

/// Runs `count` non-singular random instances and returns the worst relative
/// gradient error and how many draws were skipped as singular.
pub fn gradient_check(count: usize, seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut skipped, mut worst) = (0, 0, 0.0f64);
    while checked < count {
        let inst = Instance::random(&mut rng);
        if inst.near_singular(1e-3) {
            skipped += 1;
            continue;
        }
        worst = worst.max(inst.max_gradient_error(1e-6));
        checked += 1;
    }
    (worst, skipped)
}

/// Two-sample chi-squared homogeneity test on category counts. Categories
/// with fewer than `min_cell` pooled observations are merged. Returns the
/// p-value.
pub fn chi_squared_homogeneity(a: &BTreeMap<Vec<usize>, u64>, b: &BTreeMap<Vec<usize>, u64>, min_cell: u64) -> f64 {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let mut keys: Vec<&Vec<usize>> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut rest = (0.0, 0.0);
    for key in keys {
        let x = *a.get(key).unwrap_or(&0) as f64;
        let y = *b.get(key).unwrap_or(&0) as f64;
        if ((x + y) as u64) < min_cell {
            rest.0 += x;
            rest.1 += y;
        } else {
            cells.push((x, y));
        }
    }
    if rest.0 + rest.1 > 0.0 {
        cells.push(rest);
    }
    let (na, nb) = (na as f64, nb as f64);
    let total = na + nb;
    let mut stat = 0.0;
    for &(x, y) in &cells {
        let pooled = (x + y) / total;
        let ea = pooled * na;
        let eb = pooled * nb;
        stat += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let df = (cells.len() - 1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

/// Welch's two-sample t-test; returns the two-sided p-value.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> f64 {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        return if ma == mb { 1.0 } else { 0.0 };
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    2.0 * (1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t.abs()))
}

/// Ten-node graph with triangles, a square and a pendant, so that return,
/// in-out and triangle-closing moves all occur.
pub fn sampler_test_graph() -> Graph {
    let edges = [
        (0, 1),
        (0, 2),
        (1, 2),
        (2, 3),
        (3, 4),
        (4, 5),
        (5, 6),
        (6, 3),
        (4, 6),
        (6, 7),
        (7, 8),
        (8, 9),
        (9, 7),
        (1, 8),
    ];
    Graph::from_edges(10, &edges).unwrap().0
}
