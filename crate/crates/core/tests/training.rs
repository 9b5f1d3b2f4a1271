mod common;

use common::{karate, welch_t_test};
use gemsec_core::model::{train, TrainConfig};
use gemsec_core::pipeline::embed;
use gemsec_core::walk::{WalkConfig, WalkOrder};

fn karate_cfg(seed: u64) -> TrainConfig {
    TrainConfig {
        dims: 16,
        clusters: 2,
        walk: WalkConfig {
            walks_per_node: 5,
            walk_length: 20,
            window: 5,
            ..Default::default()
        },
        seed,
        ..Default::default()
    }
}

#[test]
fn smoothed_epoch_loss_decreases_on_karate() {
    let g = karate().graph;
    let mut good = 0;
    for seed in 0..10 {
        let out = train(&g, &karate_cfg(seed)).unwrap();
        let losses: Vec<f64> = out.log.iter().map(|e| e.loss).collect();
        let smoothed: Vec<f64> = losses.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        if smoothed.windows(2).all(|w| w[1] <= w[0]) {
            good += 1;
        }
    }
    assert!(good >= 9, "{good}/10 seeds");
}

#[test]
fn unbiased_second_order_walks_give_the_same_modularity() {
    let g = karate().graph;
    let run = |order| -> Vec<f64> {
        (0..10)
            .map(|seed| {
                let mut cfg = karate_cfg(seed);
                cfg.walk.order = order;
                embed(&g, &cfg, 1, 1).unwrap().modularity
            })
            .collect()
    };
    let first = run(WalkOrder::First);
    let second = run(WalkOrder::Second);
    let p = welch_t_test(&first, &second);
    assert!(p > 0.05, "p = {p}: {first:?} vs {second:?}");
}
