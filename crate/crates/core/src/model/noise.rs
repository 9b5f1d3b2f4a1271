use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::walk::WalkContextBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Proportional to `degree^0.75`.
    #[default]
    Unigram,
    /// Uniform over non-isolated nodes.
    Uniform,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unigram" => Ok(Self::Unigram),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::invalid(format!("unknown noise distribution `{other}`"))),
        }
    }
}

/// Normalized sampling weights over nodes for negative samples.
#[derive(Debug, Clone)]
pub struct NoiseDistribution {
    probabilities: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
}

impl NoiseDistribution {
    pub fn from_graph(g: &Graph, kind: NoiseKind) -> Result<Self> {
        let weights = (0..g.node_count())
            .map(|v| match (kind, g.degree(v)) {
                (_, 0) => 0.0,
                (NoiseKind::Unigram, d) => (d as f64).powf(0.75),
                (NoiseKind::Uniform, _) => 1.0,
            })
            .collect();
        Self::from_weights(weights)
    }

    /// Needs at least two nodes with positive weight so that a draw can always
    /// avoid the source node.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("noise weights must be finite and nonnegative"));
        }
        if weights.iter().filter(|&&w| w > 0.0).count() < 2 {
            return Err(Error::invalid(
                "noise distribution needs at least two nodes in its support",
            ));
        }
        let total: f64 = weights.iter().sum();
        let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let alias = WeightedAliasIndex::new(weights).map_err(|e| Error::invalid(format!("noise weights: {e}")))?;
        Ok(Self { probabilities, alias })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// One draw from the distribution conditioned on `!= exclude`.
    pub fn sample_excluding<R: Rng + ?Sized>(&self, exclude: usize, rng: &mut R) -> usize {
        loop {
            let u = self.alias.sample(rng);
            if u != exclude {
                return u;
            }
        }
    }
}

/// Negative samples for a batch, frozen so that loss and gradient evaluations
/// see the same draws: `k` nodes per positive pair, none equal to the pair's
/// source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoiseDraws {
    k: usize,
    draws: Vec<usize>,
}

impl NoiseDraws {
    pub fn sample<R: Rng + ?Sized>(
        noise: &NoiseDistribution,
        batch: &WalkContextBatch,
        k: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if k < 1 {
            return Err(Error::invalid("need at least one negative sample"));
        }
        let mut draws = Vec::with_capacity(batch.pairs.len() * k);
        for &(v, _) in &batch.pairs {
            for _ in 0..k {
                draws.push(noise.sample_excluding(v, rng));
            }
        }
        Ok(Self { k, draws })
    }

    /// Explicit draws, `k` per pair in pair order.
    pub fn from_draws(k: usize, draws: Vec<usize>) -> Result<Self> {
        if k < 1 || !draws.len().is_multiple_of(k) {
            return Err(Error::invalid("draw count must be a positive multiple of k"));
        }
        Ok(Self { k, draws })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pair_count(&self) -> usize {
        self.draws.len() / self.k
    }

    pub fn for_pair(&self, i: usize) -> &[usize] {
        &self.draws[i * self.k..(i + 1) * self.k]
    }
}
