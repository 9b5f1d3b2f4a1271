use serde::{Deserialize, Serialize};

use super::TrainConfig;

/// How the annealing horizon `T` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleHorizon {
    /// `T = window * walk_length * |V| * walks_per_node`. The step counter
    /// advances once per source node, so the schedules stop short of their
    /// end values.
    #[default]
    Windowed,
    /// `T = |V| * walks_per_node`, the number of steps actually taken.
    Reached,
}

impl std::str::FromStr for ScheduleHorizon {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "windowed" => Ok(Self::Windowed),
            "reached" => Ok(Self::Reached),
            other => Err(crate::Error::invalid(format!("unknown schedule horizon `{other}`"))),
        }
    }
}

pub fn total_steps(cfg: &TrainConfig, node_count: usize) -> u64 {
    let steps = (node_count * cfg.walk.walks_per_node) as u64;
    match cfg.schedule_horizon {
        ScheduleHorizon::Windowed => steps * (cfg.walk.window * cfg.walk.walk_length) as u64,
        ScheduleHorizon::Reached => steps,
    }
}

/// Exponential annealing `gamma0 * 10^(-t log10(gamma0) / T)`, evaluated as
/// `gamma0^(1 - t/T)` so both endpoints are exact.
pub fn gamma_at(t: u64, gamma0: f64, total: u64) -> f64 {
    let frac = t as f64 / total as f64;
    gamma0.powf(1.0 - frac)
}

/// Linear annealing from `alpha0` at `t = 0` to `alpha_final` at `t = T`.
pub fn alpha_at(t: u64, alpha0: f64, alpha_final: f64, total: u64) -> f64 {
    let frac = t as f64 / total as f64;
    alpha0 * (1.0 - frac) + alpha_final * frac
}
