//! Batch objective and its closed-form gradients.
//!
//! For a batch with positive pairs `P`, frozen noise draws, distinct nodes
//! `B` and traversed edges `E_S`:
//!
//! ```text
//! L = 1/|P| Σ_(v,n)∈P [ -log σ(f(n)·f(v)) - Σ_u log σ(-f(u)·f(v)) ]
//!   + γ Σ_v∈B min_c ‖f(v) - μ_c‖
//!   + λ Σ_(v,u)∈E_S w(v,u) ‖f(v) - f(u)‖
//! ```
//!
//! Norm terms contribute a zero subgradient where the distance is zero.

use super::adam::SparseRows;
use super::noise::NoiseDraws;
use super::{dot, nearest_row, EmbeddingState, Matrix};
use crate::error::{Error, Result};
use crate::graph::EdgeWeightTable;
use crate::walk::WalkContextBatch;

/// Coefficients of the non-skip-gram terms for one step.
#[derive(Debug, Clone, Copy, Default)]
pub struct Objective<'a> {
    pub gamma: f64,
    pub lambda: f64,
    pub weights: Option<&'a EdgeWeightTable>,
}

impl<'a> Objective<'a> {
    /// Skip-gram term only.
    pub fn skip_gram() -> Self {
        Self::default()
    }
}

/// Loss value with gradients for every parameter row the batch touches.
#[derive(Debug, Clone)]
pub struct BatchGradients {
    pub loss: f64,
    pub embeddings: SparseRows,
    pub centers: SparseRows,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)`, i.e. `-log σ(-x)`.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn check_shapes(state: &EmbeddingState, batch: &WalkContextBatch, draws: &NoiseDraws) -> Result<()> {
    if draws.pair_count() != batch.pairs.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} noise groups for {} pairs",
            draws.pair_count(),
            batch.pairs.len()
        )));
    }
    let n = state.node_count();
    let bad = batch
        .pairs
        .iter()
        .chain(&batch.traversed_edges)
        .flat_map(|&(a, b)| [a, b])
        .chain((0..draws.pair_count()).flat_map(|i| draws.for_pair(i).iter().copied()))
        .find(|&v| v >= n);
    match bad {
        Some(node) => Err(Error::InvalidNode { node, node_count: n }),
        None => Ok(()),
    }
}

/// Mean negative-sampling loss over the batch's positive pairs.
pub fn nce_minibatch_loss(state: &EmbeddingState, batch: &WalkContextBatch, draws: &NoiseDraws) -> Result<f64> {
    if batch.pairs.is_empty() {
        return Err(Error::invalid("negative-sampling loss needs at least one pair"));
    }
    check_shapes(state, batch, draws)?;
    Ok(nce_sum(state, batch, draws) / batch.pairs.len() as f64)
}

fn nce_sum(state: &EmbeddingState, batch: &WalkContextBatch, draws: &NoiseDraws) -> f64 {
    let f = &state.embeddings;
    let mut total = 0.0;
    for (i, &(v, n)) in batch.pairs.iter().enumerate() {
        let fv = f.row(v);
        total += softplus(-dot(f.row(n), fv));
        for &u in draws.for_pair(i) {
            total += softplus(dot(f.row(u), fv));
        }
    }
    total
}

fn smoothing_weight(obj: &Objective<'_>, a: usize, b: usize) -> Result<f64> {
    obj.weights
        .and_then(|w| w.weight(a, b))
        .ok_or(Error::MissingEdgeWeight(a, b))
}

/// Negative-sampling loss summed over the batch's pairs, plus the clustering
/// and smoothness terms.
///
/// The pair term is a sum, not the mean of [`nce_minibatch_loss`], so each
/// walk weighs its context pairs against its distinct nodes the same way the
/// whole-graph objective does.
pub fn full_loss(
    state: &EmbeddingState,
    batch: &WalkContextBatch,
    draws: &NoiseDraws,
    obj: &Objective<'_>,
) -> Result<f64> {
    check_shapes(state, batch, draws)?;
    let mut loss = nce_sum(state, batch, draws);
    if obj.gamma != 0.0 {
        let clustering: f64 = batch
            .nodes()
            .into_iter()
            .map(|v| nearest_row(state.embeddings.row(v), &state.centers).1)
            .sum();
        loss += obj.gamma * clustering;
    }
    if obj.lambda != 0.0 {
        let mut smooth = 0.0;
        for &(a, b) in &batch.traversed_edges {
            let w = smoothing_weight(obj, a, b)?;
            smooth += w * super::distance(state.embeddings.row(a), state.embeddings.row(b));
        }
        loss += obj.lambda * smooth;
    }
    Ok(loss)
}

/// Loss and gradients for one batch, accumulated into reusable buffers.
pub(crate) fn accumulate_gradients(
    state: &EmbeddingState,
    batch: &WalkContextBatch,
    draws: &NoiseDraws,
    obj: &Objective<'_>,
    node_grads: &mut SparseRows,
    center_grads: &mut SparseRows,
) -> Result<f64> {
    check_shapes(state, batch, draws)?;
    let f = &state.embeddings;
    let mut loss = 0.0;

    if !batch.pairs.is_empty() {
        let mut nce = 0.0;
        for (i, &(v, n)) in batch.pairs.iter().enumerate() {
            let fv = f.row(v);
            let fnb = f.row(n);
            let s = dot(fnb, fv);
            nce += softplus(-s);
            let c = -sigmoid(-s);
            axpy(c, fnb, node_grads.row_mut(v));
            axpy(c, fv, node_grads.row_mut(n));
            for &u in draws.for_pair(i) {
                let fu = f.row(u);
                let s = dot(fu, fv);
                nce += softplus(s);
                let c = sigmoid(s);
                axpy(c, fu, node_grads.row_mut(v));
                axpy(c, fv, node_grads.row_mut(u));
            }
        }
        loss += nce;
    }

    if obj.gamma != 0.0 {
        let mut clustering = 0.0;
        for v in batch.nodes() {
            clustering += clustering_step(f.row(v), &state.centers, obj.gamma, Some(node_grads), v, center_grads);
        }
        loss += obj.gamma * clustering;
    }

    if obj.lambda != 0.0 {
        let d = state.dims();
        let mut dir = vec![0.0; d];
        let mut smooth = 0.0;
        for &(a, b) in &batch.traversed_edges {
            let w = smoothing_weight(obj, a, b)?;
            let (fa, fb) = (f.row(a), f.row(b));
            let dist = super::distance(fa, fb);
            smooth += w * dist;
            if dist > 0.0 && w > 0.0 {
                for ((o, x), y) in dir.iter_mut().zip(fa).zip(fb) {
                    *o = (x - y) / dist;
                }
                axpy(obj.lambda * w, &dir, node_grads.row_mut(a));
                axpy(-obj.lambda * w, &dir, node_grads.row_mut(b));
            }
        }
        loss += obj.lambda * smooth;
    }

    Ok(loss)
}

/// Adds one node's clustering contribution and returns its distance to the
/// nearest center. The center row is marked active even at zero distance.
fn clustering_step(
    point: &[f64],
    centers: &Matrix,
    gamma: f64,
    node_grads: Option<&mut SparseRows>,
    v: usize,
    center_grads: &mut SparseRows,
) -> f64 {
    let (c, dist) = nearest_row(point, centers);
    let center_row = center_grads.row_mut(c);
    if dist > 0.0 {
        let mu = centers.row(c);
        let scale = gamma / dist;
        match node_grads {
            Some(node_grads) => {
                let node_row = node_grads.row_mut(v);
                for i in 0..point.len() {
                    let g = scale * (point[i] - mu[i]);
                    node_row[i] += g;
                    center_row[i] -= g;
                }
            }
            None => {
                for i in 0..point.len() {
                    center_row[i] -= scale * (point[i] - mu[i]);
                }
            }
        }
    }
    dist
}

pub fn batch_gradients(
    state: &EmbeddingState,
    batch: &WalkContextBatch,
    draws: &NoiseDraws,
    obj: &Objective<'_>,
) -> Result<BatchGradients> {
    let mut embeddings = SparseRows::new(state.node_count(), state.dims());
    let mut centers = SparseRows::new(state.cluster_count(), state.dims());
    let loss = accumulate_gradients(state, batch, draws, obj, &mut embeddings, &mut centers)?;
    Ok(BatchGradients {
        loss,
        embeddings,
        centers,
    })
}

/// Gradient of [`full_loss`] with respect to `f(v)`.
pub fn grad_node(
    state: &EmbeddingState,
    v: usize,
    batch: &WalkContextBatch,
    draws: &NoiseDraws,
    obj: &Objective<'_>,
) -> Result<Vec<f64>> {
    if v >= state.node_count() {
        return Err(Error::InvalidNode {
            node: v,
            node_count: state.node_count(),
        });
    }
    let grads = batch_gradients(state, batch, draws, obj)?;
    Ok(grads
        .embeddings
        .get(v)
        .map_or_else(|| vec![0.0; state.dims()], <[f64]>::to_vec))
}

/// `∂L/∂μ_c = -γ Σ_{v ∈ V_c} (f(v) - μ_c) / ‖f(v) - μ_c‖` over `batch_nodes`,
/// with `V_c` taken from the current nearest-center assignment. Rows of
/// clusters with no assigned nodes are zero.
pub fn grad_centers(state: &EmbeddingState, batch_nodes: &[usize], gamma: f64) -> Matrix {
    let mut rows = SparseRows::new(state.cluster_count(), state.dims());
    for &v in batch_nodes {
        clustering_step(state.embeddings.row(v), &state.centers, gamma, None, v, &mut rows);
    }
    rows.to_dense()
}
