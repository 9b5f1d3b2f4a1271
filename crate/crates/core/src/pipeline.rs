//! End-to-end runs: train, extract clusters, score them, and the records
//! written next to every output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::config_hash;
use crate::error::{Error, Result};
use crate::eval::{assign_clusters, kmeans, kmeans_restarts, mean_and_two_std, modularity, ClusterAssignment};
use crate::graph::{load_edge_list, EdgeListFormat, Graph, LoadedGraph};
use crate::io::{write_assignment, write_centers, write_embeddings, write_json, write_training_log, LabelledMatrix};
use crate::model::nearest_row;
use crate::model::{train_with_workers, Matrix, Mode, TrainConfig, TrainOutput};

/// Lloyd iteration cap for post-clustering.
pub const KMEANS_MAX_ITER: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignmentMethod {
    /// Nearest learned cluster center.
    NearestCenter,
    /// k-means on the embedding.
    KMeans,
}

#[derive(Debug, Clone)]
pub struct EmbedResult {
    pub train: TrainOutput,
    pub assignment: ClusterAssignment,
    /// Learned centers, or k-means centroids when clustering was off.
    pub centers: Matrix,
    pub method: AssignmentMethod,
    pub modularity: f64,
}

/// Trains and clusters. With clustering active the learned centers define the
/// assignment; in DeepWalk mode the embedding is clustered by k-means with
/// `cfg.clusters` clusters and `kmeans_restarts` restarts.
pub fn embed(g: &Graph, cfg: &TrainConfig, workers: usize, kmeans_restarts_count: usize) -> Result<EmbedResult> {
    let train = train_with_workers(g, cfg, workers)?;
    let (assignment, centers, method) = match cfg.mode {
        Mode::Gemsec => (
            assign_clusters(&train.state),
            train.state.centers.clone(),
            AssignmentMethod::NearestCenter,
        ),
        Mode::DeepWalk => {
            let km = kmeans_restarts(
                &train.state.embeddings,
                cfg.clusters,
                KMEANS_MAX_ITER,
                cfg.seed,
                kmeans_restarts_count,
            )?;
            (km.assignment, km.centers, AssignmentMethod::KMeans)
        }
    };
    let modularity = modularity(g, &assignment)?;
    Ok(EmbedResult {
        train,
        assignment,
        centers,
        method,
        modularity,
    })
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub modularity: f64,
    pub cluster_sizes: Vec<usize>,
    pub assignment_method: AssignmentMethod,
    pub seed: u64,
    pub config_hash: String,
}

impl Metrics {
    pub fn new(result: &EmbedResult, cfg: &TrainConfig) -> Result<Self> {
        Ok(Self {
            modularity: result.modularity,
            cluster_sizes: result.assignment.cluster_sizes(),
            assignment_method: result.method,
            seed: cfg.seed,
            config_hash: config_hash(cfg)?,
        })
    }
}

/// Everything needed to reproduce a run, plus what it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Human-readable variant, e.g. `smooth-gemsec-2`.
    pub variant: String,
    pub graph: PathBuf,
    pub format: EdgeListFormat,
    pub config: TrainConfig,
    pub config_hash: String,
    pub seed: u64,
    pub workers: usize,
    pub kmeans_restarts: usize,
    /// Effective clustering coefficient at the start of training (0 in DeepWalk mode).
    pub effective_gamma0: f64,
    /// Smoothness coefficient actually applied.
    pub effective_lambda: f64,
    pub timings: BTreeMap<String, f64>,
    pub outputs: BTreeMap<String, PathBuf>,
}

/// Variant name such as `gemsec`, `smooth-deepwalk` or `smooth-gemsec-2`.
pub fn variant_label(cfg: &TrainConfig) -> String {
    let mut label = String::new();
    if cfg.smoothing {
        label.push_str("smooth-");
    }
    label.push_str(match cfg.mode {
        Mode::Gemsec => "gemsec",
        Mode::DeepWalk => "deepwalk",
    });
    if cfg.walk.order == crate::walk::WalkOrder::Second {
        label.push_str("-2");
    }
    label
}

impl RunManifest {
    pub fn new(command: &str, graph: PathBuf, format: EdgeListFormat, cfg: &TrainConfig) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            variant: variant_label(cfg),
            graph,
            format,
            config: cfg.clone(),
            config_hash: config_hash(cfg)?,
            seed: cfg.seed,
            workers: 1,
            kmeans_restarts: 1,
            effective_gamma0: if cfg.clustering_enabled() { cfg.gamma0 } else { 0.0 },
            effective_lambda: cfg.effective_lambda(),
            timings: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }
}

pub const EMBEDDINGS_FILE: &str = "embeddings.csv";
pub const CENTERS_FILE: &str = "centers.csv";
pub const ASSIGNMENT_FILE: &str = "assignment.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAINING_LOG_FILE: &str = "training_log.csv";

/// Loads `graph`, trains, clusters and writes every output into `out_dir`,
/// finishing with the manifest. Returns the result and the manifest.
pub fn run_embed(
    graph: &Path,
    format: EdgeListFormat,
    cfg: &TrainConfig,
    workers: usize,
    kmeans_restarts_count: usize,
    out_dir: &Path,
) -> Result<(EmbedResult, RunManifest)> {
    let mut manifest = RunManifest::new("embed", graph.to_path_buf(), format, cfg)?;
    manifest.workers = workers;
    manifest.kmeans_restarts = kmeans_restarts_count;

    let started = Instant::now();
    let loaded = load_edge_list(graph, format)?;
    manifest.timings.insert("load".into(), started.elapsed().as_secs_f64());

    let started = Instant::now();
    let result = embed(&loaded.graph, cfg, workers, kmeans_restarts_count)?;
    manifest.timings.insert("embed".into(), started.elapsed().as_secs_f64());

    let started = Instant::now();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let out = |name: &str| out_dir.join(name);
    write_embeddings(
        &out(EMBEDDINGS_FILE),
        &result.train.state.embeddings,
        &loaded.original_ids,
    )?;
    write_centers(&out(CENTERS_FILE), &result.centers)?;
    write_assignment(&out(ASSIGNMENT_FILE), &result.assignment, &loaded.original_ids)?;
    write_json(&out(METRICS_FILE), &Metrics::new(&result, cfg)?)?;
    write_training_log(&out(TRAINING_LOG_FILE), &result.train.log)?;
    for name in [
        EMBEDDINGS_FILE,
        CENTERS_FILE,
        ASSIGNMENT_FILE,
        METRICS_FILE,
        TRAINING_LOG_FILE,
        MANIFEST_FILE,
    ] {
        let key = name.split('.').next().unwrap_or(name).to_string();
        manifest.outputs.insert(key, out(name));
    }
    manifest.timings.insert("write".into(), started.elapsed().as_secs_f64());
    write_json(&out(MANIFEST_FILE), &manifest)?;
    Ok((result, manifest))
}

/// Restarts behind the best-of k-means figures in [`evaluate`].
pub const BEST_OF_RESTARTS: usize = 10;

/// Reorders an embedding file's rows into the graph's internal node order.
/// Every node must appear exactly once.
pub fn align_to_graph(file: &LabelledMatrix, loaded: &LoadedGraph) -> Result<Matrix> {
    let n = loaded.graph.node_count();
    if file.labels.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "embedding file has {} rows, graph has {n} nodes",
            file.labels.len()
        )));
    }
    let ids = loaded.id_map();
    let mut out = Matrix::zeros(n, file.values.cols());
    let mut seen = vec![false; n];
    for (row, label) in file.labels.iter().enumerate() {
        let v = *ids
            .get(label)
            .ok_or_else(|| Error::ShapeMismatch(format!("embedding row for unknown node {label}")))?;
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::ShapeMismatch(format!("node {label} appears twice")));
        }
        out.row_mut(v).copy_from_slice(file.values.row(row));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularityStats {
    pub values: Vec<f64>,
    pub mean: f64,
    pub two_std: f64,
}

impl ModularityStats {
    fn new(values: Vec<f64>) -> Self {
        let (mean, two_std) = mean_and_two_std(&values);
        Self { values, mean, two_std }
    }
}

/// Output of [`evaluate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: AssignmentMethod,
    pub modularity: f64,
    pub cluster_sizes: Vec<usize>,
    /// k-means only: one restart per repeat, seeds `seed + r`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub single_restart: Option<ModularityStats>,
    /// k-means only: best of ten restarts per repeat, seeds from `seed + 10 r`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub best_of_10: Option<ModularityStats>,
}

/// Scores an embedding. With `centers`, nodes go to their nearest center.
/// Otherwise k-means with `clusters` clusters and `restarts` restarts from
/// `seed` gives the headline figure, and `repeats` further runs give the
/// single-restart and best-of-ten statistics.
pub fn evaluate(
    g: &Graph,
    embeddings: &Matrix,
    centers: Option<&Matrix>,
    clusters: usize,
    seed: u64,
    restarts: usize,
    repeats: usize,
) -> Result<EvaluationReport> {
    if embeddings.rows() != g.node_count() {
        return Err(Error::ShapeMismatch(format!(
            "{} embedding rows for {} nodes",
            embeddings.rows(),
            g.node_count()
        )));
    }
    if let Some(mu) = centers {
        if mu.cols() != embeddings.cols() {
            return Err(Error::ShapeMismatch(format!(
                "centers have {} columns, embeddings {}",
                mu.cols(),
                embeddings.cols()
            )));
        }
        let assignment: Vec<usize> = (0..embeddings.rows())
            .map(|v| nearest_row(embeddings.row(v), mu).0)
            .collect();
        let assignment = ClusterAssignment::new(assignment, mu.rows())?;
        return Ok(EvaluationReport {
            method: AssignmentMethod::NearestCenter,
            modularity: modularity(g, &assignment)?,
            cluster_sizes: assignment.cluster_sizes(),
            single_restart: None,
            best_of_10: None,
        });
    }
    let headline = kmeans_restarts(embeddings, clusters, KMEANS_MAX_ITER, seed, restarts)?;
    let mut single = Vec::with_capacity(repeats);
    let mut best = Vec::with_capacity(repeats);
    for r in 0..repeats.max(1) as u64 {
        let run = kmeans(embeddings, clusters, KMEANS_MAX_ITER, seed.wrapping_add(r))?;
        single.push(modularity(g, &run.assignment)?);
        let run = kmeans_restarts(
            embeddings,
            clusters,
            KMEANS_MAX_ITER,
            seed.wrapping_add(r * BEST_OF_RESTARTS as u64),
            BEST_OF_RESTARTS,
        )?;
        best.push(modularity(g, &run.assignment)?);
    }
    Ok(EvaluationReport {
        method: AssignmentMethod::KMeans,
        modularity: modularity(g, &headline.assignment)?,
        cluster_sizes: headline.assignment.cluster_sizes(),
        single_restart: Some(ModularityStats::new(single)),
        best_of_10: Some(ModularityStats::new(best)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::WalkOrder;

    #[test]
    fn evaluate_paths() {
        let (g, _) = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap();
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|v| vec![if v < 3 { 0.0 } else { 5.0 }, v as f64 * 0.01])
            .collect();
        let f = Matrix::from_rows(&rows).unwrap();
        let mu = Matrix::from_rows(&[vec![0.0, 0.0], vec![5.0, 0.0]]).unwrap();
        let by_centers = evaluate(&g, &f, Some(&mu), 2, 0, 1, 1).unwrap();
        assert_eq!(by_centers.method, AssignmentMethod::NearestCenter);
        assert_eq!(by_centers.cluster_sizes, vec![3, 3]);
        assert!(by_centers.single_restart.is_none());
        let by_kmeans = evaluate(&g, &f, None, 2, 0, 1, 4).unwrap();
        assert_eq!(by_kmeans.modularity, by_centers.modularity);
        let stats = by_kmeans.best_of_10.unwrap();
        assert_eq!(stats.values.len(), 4);
        assert_eq!(stats.two_std, 0.0);
        assert!(evaluate(&g, &Matrix::zeros(5, 2), None, 2, 0, 1, 1).is_err());
        assert!(evaluate(&g, &f, Some(&Matrix::zeros(2, 3)), 2, 0, 1, 1).is_err());
    }

    #[test]
    fn rows_are_aligned_by_label() {
        let loaded = crate::graph::parse_edge_list("10,20\n20,30\n", EdgeListFormat::Auto, Path::new("x")).unwrap();
        let file = LabelledMatrix {
            labels: vec![30, 10, 20],
            values: Matrix::from_rows(&[vec![3.0], vec![1.0], vec![2.0]]).unwrap(),
        };
        let aligned = align_to_graph(&file, &loaded).unwrap();
        for (v, id) in loaded.original_ids.iter().enumerate() {
            assert_eq!(aligned.row(v)[0], *id as f64 / 10.0);
        }
        let dup = LabelledMatrix {
            labels: vec![30, 30, 20],
            ..file.clone()
        };
        assert!(align_to_graph(&dup, &loaded).is_err());
        let short = LabelledMatrix {
            labels: vec![30],
            values: Matrix::from_rows(&[vec![3.0]]).unwrap(),
        };
        assert!(align_to_graph(&short, &loaded).is_err());
    }

    #[test]
    fn labels() {
        let mut cfg = TrainConfig::default();
        assert_eq!(variant_label(&cfg), "gemsec");
        cfg.smoothing = true;
        cfg.mode = Mode::DeepWalk;
        assert_eq!(variant_label(&cfg), "smooth-deepwalk");
        cfg.walk.order = WalkOrder::Second;
        assert_eq!(variant_label(&cfg), "smooth-deepwalk-2");
    }

    #[test]
    fn smooth_deepwalk_manifest_records_forced_gamma() {
        let cfg = TrainConfig {
            mode: Mode::DeepWalk,
            smoothing: true,
            ..Default::default()
        };
        let m = RunManifest::new("embed", "g.csv".into(), EdgeListFormat::Auto, &cfg).unwrap();
        assert_eq!(m.effective_gamma0, 0.0);
        assert_eq!(m.effective_lambda, 0.0625);
        let back: RunManifest = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
