//! Expansion checks for sketching matrices restricted to a sparsity model.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::matrix::{NeighborScratch, SparseBinaryMatrix};
use crate::error::{Error, Result};
use crate::models::{self, EnumerateOptions, ModelSpec, DEFAULT_ENUMERATION_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    /// Every nonempty subset of every model set; fails past `cap` sets.
    Exhaustive { cap: usize },
    /// `samples` random model-sparse sets; the result is only a lower bound.
    Sampled { samples: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub mode: VerifyMode,
    /// Random sign patterns probed per checked set for the empirical RIP-1 constant.
    pub sign_probes: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            mode: VerifyMode::Exhaustive {
                cap: DEFAULT_ENUMERATION_CAP,
            },
            sign_probes: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub budget: usize,
    /// Largest `1 - |Γ(S)| / (d |S|)` over the checked sets.
    pub epsilon: f64,
    pub worst_set: Vec<usize>,
    /// Empirical model RIC: `1 - min ||A s||_1 / (d ||s||_1)` over signed indicators probed.
    pub delta: f64,
    /// Analytic bound `2 ε` on the model RIC, kept apart from the empirical value.
    pub delta_bound: f64,
    pub sets_checked: usize,
    /// False when `epsilon` comes from sampling and is only a lower bound.
    pub exhaustive: bool,
}

pub fn verify_model_expansion(
    a: &SparseBinaryMatrix,
    model: &ModelSpec,
    opts: &VerifyOptions,
) -> Result<ExpansionReport> {
    if model.n() != a.n_left() {
        return Err(Error::DimensionMismatch {
            expected: a.n_left(),
            actual: model.n(),
        });
    }
    let mut state = Tracker::new(a, opts);
    match opts.mode {
        VerifyMode::Exhaustive { cap } => {
            let enum_opts = EnumerateOptions {
                cap,
                include_empty: false,
            };
            let mut overflow = false;
            let mut subset = Vec::new();
            let mut seen: HashSet<Vec<usize>> = HashSet::new();
            models::for_each_support(model, &enum_opts, |k_set| {
                if overflow {
                    return;
                }
                if k_set.len() >= 64 {
                    overflow = true;
                    return;
                }
                for mask in 1u64..(1u64 << k_set.len()) {
                    subset.clear();
                    subset.extend(
                        k_set
                            .iter()
                            .enumerate()
                            .filter(|(b, _)| mask >> b & 1 == 1)
                            .map(|(_, &i)| i),
                    );
                    if seen.contains(&subset) {
                        continue;
                    }
                    if seen.len() == cap {
                        overflow = true;
                        return;
                    }
                    seen.insert(subset.clone());
                    state.check(&subset);
                }
            })?;
            if overflow {
                return Err(Error::EnumerationCap { cap });
            }
        }
        VerifyMode::Sampled { samples } => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5A5A_5A5A_5A5A_5A5A);
            let mut subset = Vec::new();
            for _ in 0..samples {
                let k_set = models::sample_support(model, &mut rng);
                if k_set.is_empty() {
                    continue;
                }
                loop {
                    subset.clear();
                    subset.extend(k_set.iter().copied().filter(|_| rng.random_bool(0.5)));
                    if !subset.is_empty() {
                        break;
                    }
                }
                state.check(&subset);
            }
        }
    }
    let exhaustive = matches!(opts.mode, VerifyMode::Exhaustive { .. });
    Ok(state.finish(model.budget(), exhaustive))
}

struct Tracker<'a> {
    a: &'a SparseBinaryMatrix,
    scratch: NeighborScratch,
    probe: Vec<f64>,
    rng: ChaCha8Rng,
    sign_probes: usize,
    checked: usize,
    epsilon: f64,
    worst: Vec<usize>,
    min_ratio: f64,
}

impl<'a> Tracker<'a> {
    fn new(a: &'a SparseBinaryMatrix, opts: &VerifyOptions) -> Self {
        Tracker {
            a,
            scratch: NeighborScratch::new(a.n_right()),
            probe: vec![0.0; a.n_right()],
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            sign_probes: opts.sign_probes,
            checked: 0,
            epsilon: 0.0,
            worst: Vec::new(),
            min_ratio: 1.0,
        }
    }

    fn check(&mut self, set: &[usize]) {
        self.checked += 1;
        let d = self.a.degree();
        let counts = self.scratch.count(self.a, set);
        let deficit = 1.0 - counts.total as f64 / (d * set.len()) as f64;
        if deficit > self.epsilon || self.worst.is_empty() {
            self.epsilon = self.epsilon.max(deficit);
            self.worst = set.to_vec();
        }
        for _ in 0..self.sign_probes {
            for &i in set {
                let s = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
                for &j in self.a.column(i) {
                    self.probe[j] += s;
                }
            }
            let mut norm = 0.0;
            for &i in set {
                for &j in self.a.column(i) {
                    norm += self.probe[j].abs();
                    self.probe[j] = 0.0;
                }
            }
            let ratio = norm / (d * set.len()) as f64;
            self.min_ratio = self.min_ratio.min(ratio);
        }
    }

    fn finish(self, budget: usize, exhaustive: bool) -> ExpansionReport {
        ExpansionReport {
            budget,
            epsilon: self.epsilon,
            worst_set: self.worst,
            delta: 1.0 - self.min_ratio,
            delta_bound: 2.0 * self.epsilon,
            sets_checked: self.checked,
            exhaustive,
        }
    }
}

/// Whether `|Γ'(S)| >= (1 - 2ε) d |S|`. Empty sets pass.
pub fn unique_neighbor_check(a: &SparseBinaryMatrix, s: &[usize], epsilon: f64) -> Result<bool> {
    let counts = a.neighbors(s)?;
    let mut set = s.to_vec();
    set.sort_unstable();
    set.dedup();
    let edges = (a.degree() * set.len()) as f64;
    // ε usually arrives as 1 - |Γ|/(d|S|) in floating point, so the bound can be
    // tight up to round-off.
    Ok(counts.unique as f64 >= (1.0 - 2.0 * epsilon) * edges - 1e-9 * edges)
}
