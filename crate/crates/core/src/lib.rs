//! Joint node embedding and community detection.
//!
//! Node embeddings are learned with skip-gram and negative sampling over
//! random-walk windows while a set of cluster centers is learned in the same
//! space, pulling each node toward its nearest center. An optional
//! smoothness term penalizes embedding distance across traversed edges,
//! weighted by the Jaccard overlap of the endpoints' neighborhoods. With the
//! clustering weight forced to zero the model is plain DeepWalk.
//!
//! ```no_run
//! use gemsec_core::{graph, model, eval};
//!
//! let loaded = graph::load_edge_list("edges.csv", graph::EdgeListFormat::Auto)?;
//! let cfg = model::TrainConfig { clusters: 2, ..Default::default() };
//! let out = model::train(&loaded.graph, &cfg)?;
//! let clusters = eval::assign_clusters(&out.state);
//! println!("Q = {}", eval::modularity(&loaded.graph, &clusters)?);
//! # Ok::<(), gemsec_core::Error>(())
//! ```

pub mod benchmark;
pub mod config;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod walk;

pub use error::{Error, Result};
