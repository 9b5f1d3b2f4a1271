//! Compares GEMSEC clusters with k-means on DeepWalk embeddings for the
//! karate-club graph over ten seeds.

use gemsec_core::graph::{load_edge_list, EdgeListFormat};
use gemsec_core::model::{Mode, TrainConfig};
use gemsec_core::pipeline::embed;
use gemsec_core::walk::WalkConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/karate.csv");
    let g = load_edge_list(path, EdgeListFormat::Auto)?.graph;
    let base = TrainConfig {
        dims: 16,
        clusters: 2,
        walk: WalkConfig {
            walks_per_node: 5,
            walk_length: 20,
            window: 5,
            ..Default::default()
        },
        ..Default::default()
    };
    for mode in [Mode::Gemsec, Mode::DeepWalk] {
        let mut scores = Vec::new();
        for seed in 0..10 {
            let cfg = TrainConfig {
                mode,
                seed,
                ..base.clone()
            };
            scores.push(embed(&g, &cfg, 1, 1)?.modularity);
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        println!("{mode:?}: mean {mean:.4} {scores:.3?}");
    }
    Ok(())
}
