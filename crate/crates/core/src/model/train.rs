//! The training loop: per epoch, shuffle the nodes; per source node, anneal
//! the coefficients, sample one walk, and take one Adam step on its batch.

use std::sync::mpsc::sync_channel;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_update, SparseRows};
use super::noise::{NoiseDistribution, NoiseDraws};
use super::objective::{accumulate_gradients, Objective};
use super::schedule::{alpha_at, gamma_at, total_steps};
use super::{init_state, EmbeddingState, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::{compute_edge_weights, Graph};
use crate::rng::{stream_rng, Stream};
use crate::walk::{epoch_order, extract_features, sample_walk, WalkContextBatch};

/// Source nodes handed to the producer pool at a time.
const PRODUCER_CHUNK: usize = 256;
/// Chunks buffered between producer and trainer.
const QUEUE_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean batch objective over the epoch, evaluated before each update.
    pub loss: f64,
    /// Coefficients in effect at the last step of the epoch.
    pub gamma: f64,
    pub alpha: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub state: EmbeddingState,
    pub log: Vec<EpochLog>,
}

pub fn train(g: &Graph, cfg: &TrainConfig) -> Result<TrainOutput> {
    train_with_workers(g, cfg, 1)
}

/// Trains with `workers` walk-producer threads. Updates are always applied by
/// one consumer in epoch order, so the result does not depend on `workers`.
pub fn train_with_workers(g: &Graph, cfg: &TrainConfig, workers: usize) -> Result<TrainOutput> {
    cfg.validate()?;
    let n = g.node_count();
    if g.edge_count() == 0 {
        return Err(Error::invalid("cannot train on a graph without edges"));
    }
    let noise = NoiseDistribution::from_graph(g, cfg.noise)?;
    let weights = cfg.smoothing.then(|| compute_edge_weights(g));
    let total = total_steps(cfg, n);

    let mut state = init_state(n, cfg, cfg.seed);
    let mut node_grads = SparseRows::new(n, cfg.dims);
    let mut center_grads = SparseRows::new(cfg.clusters, cfg.dims);
    let mut log = Vec::with_capacity(cfg.walk.walks_per_node);
    let mut t: u64 = 0;

    let pool = if workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::invalid(format!("cannot start {workers} workers: {e}")))?,
        )
    } else {
        None
    };

    for epoch in 0..cfg.walk.walks_per_node {
        let started = Instant::now();
        let order = epoch_order(n, epoch as u64, cfg.seed);
        let mut loss_sum = 0.0;
        let mut updates = 0usize;
        let (mut gamma, mut alpha) = (0.0, cfg.alpha0);

        let mut consume = |source: usize, batch: WalkContextBatch| -> Result<()> {
            t += 1;
            gamma = if cfg.clustering_enabled() {
                gamma_at(t, cfg.gamma0, total)
            } else {
                0.0
            };
            alpha = alpha_at(t, cfg.alpha0, cfg.alpha_final, total);
            if batch.pairs.is_empty() {
                return Ok(());
            }
            let mut rng = stream_rng(cfg.seed, Stream::Noise, epoch as u64, source as u64);
            let draws = NoiseDraws::sample(&noise, &batch, cfg.negatives, &mut rng)?;
            let objective = Objective {
                gamma,
                lambda: cfg.effective_lambda(),
                weights: weights.as_ref(),
            };
            node_grads.clear();
            center_grads.clear();
            let loss = accumulate_gradients(&state, &batch, &draws, &objective, &mut node_grads, &mut center_grads)?;
            adam_update(&mut state, &node_grads, &center_grads, alpha)?;
            debug_assert!(state.is_finite(), "non-finite parameters after step {t}");
            loss_sum += loss;
            updates += 1;
            Ok(())
        };

        let produce = |source: usize| -> Result<WalkContextBatch> {
            let walk = sample_walk(g, &cfg.walk, cfg.seed, epoch as u64, source)?;
            Ok(extract_features(&walk, cfg.walk.window))
        };

        match &pool {
            None => {
                for &source in &order {
                    consume(source, produce(source)?)?;
                }
            }
            Some(pool) => {
                std::thread::scope(|scope| -> Result<()> {
                    let (tx, rx) = sync_channel::<Vec<(usize, Result<WalkContextBatch>)>>(QUEUE_DEPTH);
                    let order = &order;
                    let produce = &produce;
                    scope.spawn(move || {
                        for chunk in order.chunks(PRODUCER_CHUNK) {
                            let batches =
                                pool.install(|| chunk.par_iter().map(|&s| (s, produce(s))).collect::<Vec<_>>());
                            if tx.send(batches).is_err() {
                                break;
                            }
                        }
                    });
                    for chunk in rx {
                        for (source, batch) in chunk {
                            consume(source, batch?)?;
                        }
                    }
                    Ok(())
                })?;
            }
        }

        let loss = if updates > 0 { loss_sum / updates as f64 } else { 0.0 };
        log::debug!("epoch {epoch}: loss {loss:.6} gamma {gamma:.6} alpha {alpha:.6}");
        log.push(EpochLog {
            epoch,
            loss,
            gamma,
            alpha,
            seconds: started.elapsed().as_secs_f64(),
        });
    }

    Ok(TrainOutput { state, log })
}
