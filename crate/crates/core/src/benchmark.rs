//! Runtime scaling on Erdős–Rényi graphs of doubling size.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::erdos_renyi;
use crate::model::{train_with_workers, Mode, TrainConfig};
use crate::pipeline::variant_label;

pub const BENCHMARK_AVG_DEGREE: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub log2_n: u32,
    pub mode: String,
    /// Fastest of the repeats, optimization loop only.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
    /// Least-squares slope of log2(seconds) against log2(n), per mode.
    pub slopes: Vec<(String, f64)>,
}

impl BenchmarkReport {
    pub fn slope(&self, mode: &str) -> Option<f64> {
        self.slopes.iter().find(|(m, _)| m == mode).map(|(_, s)| *s)
    }

    pub fn seconds(&self, mode: &str, log2_n: u32) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.mode == mode && r.log2_n == log2_n)
            .map(|r| r.seconds)
    }

    /// `log2_n,mode,seconds`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("log2_n,mode,seconds\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.log2_n, r.mode, r.seconds));
        }
        out
    }
}

/// Variant configuration for a benchmark mode name (`deepwalk`, `gemsec`,
/// optionally prefixed with `smooth-`).
pub fn variant_config(base: &TrainConfig, mode: &str) -> Result<TrainConfig> {
    let (smoothing, name) = match mode.strip_prefix("smooth-") {
        Some(rest) => (true, rest),
        None => (false, mode),
    };
    let mode: Mode = name.parse()?;
    Ok(TrainConfig {
        mode,
        smoothing,
        ..base.clone()
    })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Times training on G(2^e, 20/(2^e - 1)) for `e` in `min_exp..=max_exp`.
/// Graph generation is excluded from the timing.
pub fn run_benchmark(
    min_exp: u32,
    max_exp: u32,
    modes: &[String],
    base: &TrainConfig,
    repeats: usize,
    workers: usize,
) -> Result<BenchmarkReport> {
    if min_exp >= max_exp || max_exp > 30 {
        return Err(Error::invalid(format!(
            "benchmark range needs min < max <= 30, got {min_exp}..{max_exp}"
        )));
    }
    if (1u64 << min_exp) as f64 - 1.0 < BENCHMARK_AVG_DEGREE {
        return Err(Error::invalid(format!(
            "2^{min_exp} nodes cannot have average degree {BENCHMARK_AVG_DEGREE}"
        )));
    }
    if modes.is_empty() {
        return Err(Error::invalid("no benchmark modes given"));
    }
    let configs: Vec<(String, TrainConfig)> = modes
        .iter()
        .map(|m| variant_config(base, m).map(|c| (variant_label(&c), c)))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for exp in min_exp..=max_exp {
        let g = erdos_renyi(1 << exp, BENCHMARK_AVG_DEGREE, base.seed.wrapping_add(exp as u64))?;
        for (label, cfg) in &configs {
            let mut best = f64::INFINITY;
            for _ in 0..repeats.max(1) {
                let started = Instant::now();
                train_with_workers(&g, cfg, workers)?;
                best = best.min(started.elapsed().as_secs_f64());
            }
            log::info!("n=2^{exp} {label}: {best:.3}s");
            rows.push(BenchmarkRow {
                log2_n: exp,
                mode: label.clone(),
                seconds: best,
            });
        }
    }

    let slopes = configs
        .iter()
        .map(|(label, _)| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| &r.mode == label)
                .map(|r| (r.log2_n as f64, r.seconds.log2()))
                .unzip();
            (label.clone(), least_squares_slope(&xs, &ys))
        })
        .collect();
    Ok(BenchmarkReport { rows, slopes })
}
