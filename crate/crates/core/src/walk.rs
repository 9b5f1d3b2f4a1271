//! First- and second-order random walks and skip-gram window extraction.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkOrder {
    #[default]
    First,
    Second,
}

impl std::str::FromStr for WalkOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" | "1" => Ok(Self::First),
            "second" | "2" => Ok(Self::Second),
            other => Err(Error::invalid(format!("unknown walk order `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub order: WalkOrder,
    /// Return parameter of second-order walks.
    pub p: f64,
    /// In-out parameter of second-order walks.
    pub q: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walks_per_node: 5,
            walk_length: 80,
            window: 5,
            order: WalkOrder::First,
            p: 1.0,
            q: 1.0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length < 2 {
            return Err(Error::invalid("walk length must be at least 2"));
        }
        if self.window < 1 || self.window >= self.walk_length {
            return Err(Error::invalid(format!(
                "window must satisfy 1 <= window < walk length ({}), got {}",
                self.walk_length, self.window
            )));
        }
        if self.walks_per_node < 1 {
            return Err(Error::invalid("walks per node must be at least 1"));
        }
        check_bias(self.p, self.q)
    }
}

fn check_bias(p: f64, q: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite() && q > 0.0 && q.is_finite()) {
        return Err(Error::invalid(format!(
            "return and in-out parameters must be positive, got p={p}, q={q}"
        )));
    }
    Ok(())
}

/// A sequence of adjacent nodes starting at its source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk(Vec<usize>);

impl Walk {
    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn source(&self) -> usize {
        self.0[0]
    }
}

impl From<Vec<usize>> for Walk {
    fn from(nodes: Vec<usize>) -> Self {
        Walk(nodes)
    }
}

/// Uniform-neighbor walk of `length` nodes; an isolated source yields `[source]`.
pub fn first_order_walk<R: Rng + ?Sized>(g: &Graph, source: usize, length: usize, rng: &mut R) -> Result<Walk> {
    g.check_node(source)?;
    let mut nodes = Vec::with_capacity(length);
    nodes.push(source);
    let mut current = source;
    while nodes.len() < length {
        let nbrs = g.neighbors(current);
        if nbrs.is_empty() {
            break;
        }
        current = nbrs[rng.random_range(0..nbrs.len())];
        nodes.push(current);
    }
    Ok(Walk(nodes))
}

/// Unnormalized transition weight from `(prev, current)` to candidate `next`.
fn bias_weight(g: &Graph, prev: usize, next: usize, p: f64, q: f64) -> f64 {
    if next == prev {
        1.0 / p
    } else if g.has_edge(prev, next) {
        1.0
    } else {
        1.0 / q
    }
}

/// Transition distribution of a second-order walk standing at `current`
/// having arrived from `prev`, in neighbor-list order.
pub fn second_order_transition(g: &Graph, prev: usize, current: usize, p: f64, q: f64) -> Vec<(usize, f64)> {
    let nbrs = g.neighbors(current);
    let weights: Vec<f64> = nbrs.iter().map(|&x| bias_weight(g, prev, x, p, q)).collect();
    let total: f64 = weights.iter().sum();
    nbrs.iter().zip(weights).map(|(&x, w)| (x, w / total)).collect()
}

/// Biased walk: after a uniform first step, moving from `(t, v)` to `x` has
/// weight `1/p` if `x == t`, `1` if `x` is adjacent to `t`, `1/q` otherwise.
/// Weights are evaluated per step by scanning the neighbors of `v`.
pub fn second_order_walk<R: Rng + ?Sized>(
    g: &Graph,
    source: usize,
    length: usize,
    p: f64,
    q: f64,
    rng: &mut R,
) -> Result<Walk> {
    g.check_node(source)?;
    check_bias(p, q)?;
    let mut nodes = Vec::with_capacity(length);
    nodes.push(source);
    let mut weights = Vec::new();
    while nodes.len() < length {
        let current = *nodes.last().unwrap();
        let nbrs = g.neighbors(current);
        if nbrs.is_empty() {
            break;
        }
        let next = if nodes.len() == 1 {
            nbrs[rng.random_range(0..nbrs.len())]
        } else {
            let prev = nodes[nodes.len() - 2];
            weights.clear();
            weights.extend(nbrs.iter().map(|&x| bias_weight(g, prev, x, p, q)));
            let total: f64 = weights.iter().sum();
            let mut target = rng.random::<f64>() * total;
            let mut chosen = nbrs[nbrs.len() - 1];
            for (&x, &w) in nbrs.iter().zip(&weights) {
                if target < w {
                    chosen = x;
                    break;
                }
                target -= w;
            }
            chosen
        };
        nodes.push(next);
    }
    Ok(Walk(nodes))
}

/// Samples one walk from `source` for `epoch`, using the stream keyed by
/// `(seed, epoch, source)` so the result is independent of scheduling.
pub fn sample_walk(g: &Graph, cfg: &WalkConfig, seed: u64, epoch: u64, source: usize) -> Result<Walk> {
    let mut rng = stream_rng(seed, Stream::Walk, epoch, source as u64);
    match cfg.order {
        WalkOrder::First => first_order_walk(g, source, cfg.walk_length, &mut rng),
        WalkOrder::Second => second_order_walk(g, source, cfg.walk_length, cfg.p, cfg.q, &mut rng),
    }
}

/// Ordered skip-gram pairs of one walk plus the edges it traversed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WalkContextBatch {
    pub pairs: Vec<(usize, usize)>,
    pub traversed_edges: Vec<(usize, usize)>,
}

impl WalkContextBatch {
    /// Distinct nodes appearing in the batch, ascending.
    pub fn nodes(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .pairs
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .chain(self.traversed_edges.iter().flat_map(|&(a, b)| [a, b]))
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }
}

/// Emits every `(walk[i], walk[j])` with `0 < |i - j| <= window`, windows
/// truncated at the walk ends, and the walk's consecutive node pairs.
pub fn extract_features(walk: &Walk, window: usize) -> WalkContextBatch {
    let nodes = walk.nodes();
    let n = nodes.len();
    let mut pairs = Vec::with_capacity(2 * window * n);
    for i in 0..n {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(n.saturating_sub(1));
        for j in lo..=hi {
            if j != i {
                pairs.push((nodes[i], nodes[j]));
            }
        }
    }
    let traversed_edges = nodes.windows(2).map(|w| (w[0], w[1])).collect();
    WalkContextBatch { pairs, traversed_edges }
}

/// Uniform shuffle of `0..node_count`, fixed by `(seed, epoch)`.
pub fn epoch_order(node_count: usize, epoch: u64, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..node_count).collect();
    let mut rng = stream_rng(seed, Stream::Shuffle, epoch, 0);
    order.shuffle(&mut rng);
    order
}
