//! Joint embedding-and-clustering model: parameters, objective, optimizer
//! and the training loop.

mod adam;
mod noise;
mod objective;
mod schedule;
mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::walk::WalkConfig;

pub use adam::{adam_update, SparseRows, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use noise::{NoiseDistribution, NoiseDraws, NoiseKind};
pub use objective::{
    batch_gradients, full_loss, grad_centers, grad_node, nce_minibatch_loss, BatchGradients, Objective,
};
pub use schedule::{alpha_at, gamma_at, total_steps, ScheduleHorizon};
pub use train::{train, train_with_workers, EpochLog, TrainOutput};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Joint embedding and clustering with annealed clustering weight.
    #[default]
    Gemsec,
    /// Clustering weight forced to zero: plain skip-gram with negative sampling.
    DeepWalk,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gemsec" => Ok(Self::Gemsec),
            "deepwalk" => Ok(Self::DeepWalk),
            other => Err(Error::invalid(format!("unknown mode `{other}`"))),
        }
    }
}

/// All hyperparameters of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    pub dims: usize,
    pub clusters: usize,
    pub negatives: usize,
    pub gamma0: f64,
    pub alpha0: f64,
    pub alpha_final: f64,
    pub lambda: f64,
    pub smoothing: bool,
    pub walk: WalkConfig,
    pub noise: NoiseKind,
    pub schedule_horizon: ScheduleHorizon,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Gemsec,
            dims: 16,
            clusters: 20,
            negatives: 10,
            gamma0: 0.1,
            alpha0: 0.01,
            alpha_final: 0.001,
            lambda: 0.0625,
            smoothing: false,
            walk: WalkConfig::default(),
            noise: NoiseKind::Unigram,
            schedule_horizon: ScheduleHorizon::Windowed,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.walk.validate()?;
        if self.dims < 1 || self.clusters < 1 {
            return Err(Error::invalid("dimensions and cluster count must be at least 1"));
        }
        if self.negatives < 1 {
            return Err(Error::invalid("need at least one negative sample"));
        }
        if !(self.gamma0 > 0.0 && self.gamma0 <= 1.0) {
            return Err(Error::invalid(format!(
                "gamma0 must lie in (0, 1], got {}",
                self.gamma0
            )));
        }
        if !(self.alpha_final > 0.0 && self.alpha_final <= self.alpha0 && self.alpha0.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rates must satisfy 0 < alpha_final <= alpha0, got {} and {}",
                self.alpha_final, self.alpha0
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Smoothness coefficient actually applied (zero unless smoothing is on).
    pub fn effective_lambda(&self) -> f64 {
        if self.smoothing {
            self.lambda
        } else {
            0.0
        }
    }

    pub fn clustering_enabled(&self) -> bool {
        self.mode == Mode::Gemsec
    }
}

/// Trainable parameters and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingState {
    pub embeddings: Matrix,
    pub centers: Matrix,
    pub(crate) embedding_moments: (Matrix, Matrix),
    pub(crate) center_moments: (Matrix, Matrix),
    pub step: u64,
}

impl EmbeddingState {
    /// State with the given parameters and zeroed optimizer moments.
    pub fn from_parameters(embeddings: Matrix, centers: Matrix) -> Result<Self> {
        if embeddings.cols() != centers.cols() || embeddings.cols() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "embedding width {} vs center width {}",
                embeddings.cols(),
                centers.cols()
            )));
        }
        let (n, c, d) = (embeddings.rows(), centers.rows(), embeddings.cols());
        Ok(Self {
            embeddings,
            centers,
            embedding_moments: (Matrix::zeros(n, d), Matrix::zeros(n, d)),
            center_moments: (Matrix::zeros(c, d), Matrix::zeros(c, d)),
            step: 0,
        })
    }

    pub fn dims(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn node_count(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn cluster_count(&self) -> usize {
        self.centers.rows()
    }

    pub fn is_finite(&self) -> bool {
        self.embeddings.is_finite() && self.centers.is_finite()
    }

    pub fn moments(&self) -> [&Matrix; 4] {
        [
            &self.embedding_moments.0,
            &self.embedding_moments.1,
            &self.center_moments.0,
            &self.center_moments.1,
        ]
    }
}

/// Embeddings and centers drawn i.i.d. from `U[-1/(2d), 1/(2d)]`.
pub fn init_state(node_count: usize, cfg: &TrainConfig, seed: u64) -> EmbeddingState {
    let d = cfg.dims;
    let bound = 1.0 / (2.0 * d as f64);
    let mut rng = stream_rng(seed, Stream::Init, 0, 0);
    let mut draw = |rows: usize| {
        let mut m = Matrix::zeros(rows, d);
        for x in m.data.iter_mut() {
            *x = rng.random_range(-bound..=bound);
        }
        m
    };
    let embeddings = draw(node_count);
    let centers = draw(cfg.clusters);
    EmbeddingState::from_parameters(embeddings, centers).expect("consistent shapes")
}

/// Nearest center of `v` and its Euclidean distance; ties go to the lowest index.
pub fn closest_center(state: &EmbeddingState, v: usize) -> (usize, f64) {
    nearest_row(state.embeddings.row(v), &state.centers)
}

pub(crate) fn nearest_row(point: &[f64], centers: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.rows() {
        let d2 = squared_distance(point, centers.row(c));
        if d2 < best.1 {
            best = (c, d2);
        }
    }
    (best.0, best.1.sqrt())
}
