//! Flat `key = value` configuration files and config fingerprints.
//!
//! Keys use the same names as the command-line flags (`walk-length`,
//! `alpha-final`, ...); underscores are accepted in place of dashes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::TrainConfig;

/// Every key understood by [`TrainConfig::set`].
pub const CONFIG_KEYS: &[&str] = &[
    "mode",
    "smooth",
    "order",
    "p",
    "q",
    "dims",
    "clusters",
    "negatives",
    "gamma0",
    "alpha0",
    "alpha-final",
    "lambda",
    "walk-length",
    "walks-per-node",
    "window",
    "noise",
    "schedule-horizon",
    "seed",
];

pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str, source: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: source.to_path_buf(),
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        map.insert(normalize_key(k), v.trim().to_string());
    }
    Ok(map)
}

pub fn load_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_key_values(&text, path)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::invalid(format!("{key}: cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::invalid(format!("{key}: expected a boolean, got `{value}`"))),
    }
}

impl TrainConfig {
    /// Sets one hyperparameter by its flag name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize_key(key);
        let k = key.as_str();
        match k {
            "mode" => self.mode = value.parse()?,
            "smooth" => self.smoothing = parse_bool(k, value)?,
            "order" => self.walk.order = value.parse()?,
            "p" => self.walk.p = parse(k, value)?,
            "q" => self.walk.q = parse(k, value)?,
            "dims" | "dimensions" => self.dims = parse(k, value)?,
            "clusters" => self.clusters = parse(k, value)?,
            "negatives" => self.negatives = parse(k, value)?,
            "gamma0" => self.gamma0 = parse(k, value)?,
            "alpha0" => self.alpha0 = parse(k, value)?,
            "alpha-final" => self.alpha_final = parse(k, value)?,
            "lambda" => self.lambda = parse(k, value)?,
            "walk-length" => self.walk.walk_length = parse(k, value)?,
            "walks-per-node" => self.walk.walks_per_node = parse(k, value)?,
            "window" => self.walk.window = parse(k, value)?,
            "noise" => self.noise = value.parse()?,
            "schedule-horizon" => self.schedule_horizon = value.parse()?,
            "seed" => self.seed = parse(k, value)?,
            _ => return Err(Error::invalid(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Applies every entry of `map` whose key is a training parameter and
    /// returns the keys that were not recognized.
    pub fn apply(&mut self, map: &BTreeMap<String, String>) -> Result<Vec<String>> {
        let mut rest = Vec::new();
        for (k, v) in map {
            if CONFIG_KEYS.contains(&k.as_str()) || k == "dimensions" {
                self.set(k, v)?;
            } else {
                rest.push(k.clone());
            }
        }
        Ok(rest)
    }
}

/// SHA-256 of the canonical JSON form of a serializable value, hex encoded.
pub fn config_hash<T: serde::Serialize>(value: &T) -> Result<String> {
    let json = serde_json::to_vec(value)?;
    let digest = Sha256::digest(&json);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
