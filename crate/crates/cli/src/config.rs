//! Experiment config files: either one JSON object or `key = value` lines.

use std::fmt::Display;
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};
use expander_sketch::harness::ExperimentConfig;
use expander_sketch::recovery::Algorithm;
use serde::Deserialize;
use serde_json::{Map, Value};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub n_values: Option<ListOr<usize>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub m_start: Option<usize>,
    pub m_end: Option<usize>,
    pub m_step: Option<usize>,
    pub algos: Option<ListOr<String>>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub full_curve: Option<bool>,
    pub record_wall_time: Option<bool>,
}

/// A list given either as an array or as one comma-separated string.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ListOr<T> {
    List(Vec<T>),
    Text(String),
}

impl<T: FromStr + Clone> ListOr<T>
where
    T::Err: Display,
{
    fn items(&self) -> Result<Vec<T>> {
        match self {
            ListOr::List(v) => Ok(v.clone()),
            ListOr::Text(s) => s
                .split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|p| {
                    p.parse::<T>()
                        .map_err(|e| anyhow!("bad list item `{p}`: {e}"))
                })
                .collect(),
        }
    }
}

pub fn parse_overrides(text: &str) -> Result<Overrides> {
    let trimmed = text.trim_start();
    let value = if trimmed.starts_with('{') {
        serde_json::from_str(trimmed).context("config is not valid JSON")?
    } else {
        Value::Object(key_values(text)?)
    };
    serde_json::from_value(value).context("unrecognized config contents")
}

fn key_values(text: &str) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`", no + 1))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        // Numbers and booleans keep their JSON type; everything else is a string.
        let parsed = serde_json::from_str::<Value>(value)
            .ok()
            .filter(|v| v.is_number() || v.is_boolean())
            .unwrap_or_else(|| Value::String(value.to_string()));
        map.insert(key, parsed);
    }
    Ok(map)
}

/// Powers of two between `lo` and `hi`, inclusive.
pub fn powers_of_two(lo: usize, hi: usize) -> Vec<usize> {
    (0..usize::BITS)
        .map(|p| 1usize << p)
        .filter(|&n| n >= lo && n <= hi)
        .collect()
}

pub fn parse_algorithms(items: &[String]) -> Result<Vec<Algorithm>> {
    items
        .iter()
        .map(|s| s.parse::<Algorithm>().map_err(|e| anyhow!(e)))
        .collect()
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        if self.n_min.is_some() || self.n_max.is_some() {
            let lo = self.n_min.unwrap_or(config.n_values[0]);
            let hi = self.n_max.unwrap_or(*config.n_values.last().unwrap());
            config.n_values = powers_of_two(lo, hi);
        }
        if let Some(v) = &self.n_values {
            config.n_values = v.items()?;
        }
        if let Some(v) = self.trials {
            config.trials = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.threshold {
            config.success_threshold = v;
        }
        if self.m_start.is_some() {
            config.m_grid.start = self.m_start;
        }
        if self.m_end.is_some() {
            config.m_grid.end = self.m_end;
        }
        if self.m_step.is_some() {
            config.m_grid.step = self.m_step;
        }
        if let Some(v) = &self.algos {
            config.algorithms = parse_algorithms(&v.items()?)?;
        }
        if let Some(v) = self.max_iterations {
            config.max_iterations = v;
        }
        if let Some(v) = self.tolerance {
            config.tolerance = v;
        }
        if let Some(v) = self.full_curve {
            config.full_curve = v;
        }
        if let Some(v) = self.record_wall_time {
            config.record_wall_time = v;
        }
        Ok(())
    }
}
