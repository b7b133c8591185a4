//! Minimum-sketch-length experiments.
//!
//! For each ambient dimension `N` and decoder, the harness sweeps the sketch
//! length `m` upward, runs independent trials (fresh matrix per `m`, fresh
//! signal per trial), and reports the smallest `m` whose median relative ℓ1
//! error falls below the success threshold. Every trial draws from an RNG
//! stream derived only from the master seed and the trial coordinates, so
//! results do not depend on execution order or thread count.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expander::{group_expander_params, tree_expander_params, SparseBinaryMatrix};
use crate::io::write_text;
use crate::models::{sample_model_signal, GroupModel, ModelSpec, TreeModel};
use crate::recovery::{recover, Algorithm, RecoveryConfig, SketchProblem, StopReason};

/// Active blocks in the block-sparse experiment.
pub const BLOCK_ACTIVE: usize = 5;
/// Constant in the block-experiment degree `⌊c ln N / ln(k g)⌋`.
pub const BLOCK_DEGREE_CONSTANT: f64 = 2.0;
/// Constant in the tree-experiment degree `⌊c ln(N/k) / ln ln(N/k)⌋`.
pub const TREE_DEGREE_CONSTANT: f64 = 2.5;
pub const FIXED_D_SPARSITY: usize = 16;
pub const FIXED_D_DEGREE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Block,
    Tree,
    FixedD,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Block => "block",
            Family::Tree => "tree",
            Family::FixedD => "fixed_d",
        }
    }

    fn code(self) -> u64 {
        match self {
            Family::Block => 1,
            Family::Tree => 2,
            Family::FixedD => 3,
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "block" => Ok(Family::Block),
            "tree" => Ok(Family::Tree),
            "fixed-d" | "fixed_d" => Ok(Family::FixedD),
            other => Err(Error::InvalidParameter(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub family: Family,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub success_threshold: f64,
    pub m_grid: MGrid,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Run every grid point instead of stopping at the first success.
    pub full_curve: bool,
    /// Measure per-trial wall time. Timings are not reproducible, so the
    /// `wall_time` column stays empty unless this is set.
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn new(family: Family) -> Self {
        ExperimentConfig {
            family,
            n_values: (7..=13).map(|p| 1usize << p).collect(),
            trials: 50,
            success_threshold: 1e-5,
            m_grid: MGrid::default(),
            seed: 0,
            algorithms: vec![Algorithm::Eiht, Algorithm::Meiht],
            max_iterations: 500,
            tolerance: 1e-7,
            full_curve: true,
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.success_threshold.is_nan() || self.success_threshold <= 0.0 {
            return Err(Error::InvalidParameter(
                "success threshold must be positive".into(),
            ));
        }
        if self.n_values.is_empty() || self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "n_values must be nonempty and strictly ascending".into(),
            ));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidParameter("no algorithms selected".into()));
        }
        if self.m_grid.step == Some(0) {
            return Err(Error::InvalidParameter("m step must be positive".into()));
        }
        if let (Some(a), Some(b)) = (self.m_grid.start, self.m_grid.end) {
            if a > b {
                return Err(Error::InvalidParameter(format!("empty m range {a}..={b}")));
            }
        }
        Ok(())
    }
}

/// The `m` sweep: an inclusive arithmetic range. Unset fields take the
/// family defaults described in [`m_grid`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MGrid {
    pub start: Option<usize>,
    pub end: Option<usize>,
    pub step: Option<usize>,
}

/// Derived parameters of one problem size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InstanceParams {
    /// Model order: active blocks or subtree size.
    pub k: usize,
    pub d: usize,
    /// Number of blocks `M` (block family only).
    pub n_groups: Option<usize>,
    /// Nominal block size `g = ⌊N/M⌋` (block family only).
    pub g: Option<usize>,
    /// Sparsity handed to the plain-sparse decoders.
    pub plain_budget: usize,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub model: ModelSpec,
    pub signal: Vec<f64>,
    pub params: InstanceParams,
}

/// Block-sparse instance: `M = ⌊N / log2 N⌋` blocks of size `g = ⌊N/M⌋` (the
/// last block absorbs the remainder), 5 active blocks, `d = ⌊2 ln N / ln(k g)⌋`.
pub fn block_instance(n: usize, seed: u64) -> Result<Instance> {
    let model = block_model(n)?;
    let params = block_params(n)?;
    let signal = sample_model_signal(&model, seed);
    Ok(Instance {
        model,
        signal,
        params,
    })
}

fn block_model(n: usize) -> Result<ModelSpec> {
    let (n_groups, _) = block_shape(n)?;
    Ok(ModelSpec::Group(GroupModel::blocks(
        n,
        n_groups,
        BLOCK_ACTIVE,
    )?))
}

fn block_shape(n: usize) -> Result<(usize, usize)> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "N = {n} too small for blocks"
        )));
    }
    let n_groups = (n as f64 / (n as f64).log2()).floor() as usize;
    Ok((n_groups, n / n_groups))
}

fn block_params(n: usize) -> Result<InstanceParams> {
    let (n_groups, g) = block_shape(n)?;
    let d = group_expander_params(n, BLOCK_ACTIVE, g, 1.0, BLOCK_DEGREE_CONSTANT, 1.0)?.d;
    let g_max = n - (n_groups - 1) * g;
    Ok(InstanceParams {
        k: BLOCK_ACTIVE,
        d,
        n_groups: Some(n_groups),
        g: Some(g),
        plain_budget: BLOCK_ACTIVE * g_max,
    })
}

/// Tree-sparse instance on the complete binary tree over `0..N`:
/// `k = ⌊2 log2 N⌋`, `d = ⌊2.5 ln(N/k) / ln ln(N/k)⌋`.
pub fn tree_instance(n: usize, seed: u64) -> Result<Instance> {
    let params = tree_params(n)?;
    let model = ModelSpec::Tree(TreeModel::complete(n, 2, params.k)?);
    let signal = sample_model_signal(&model, seed);
    Ok(Instance {
        model,
        signal,
        params,
    })
}

fn tree_params(n: usize) -> Result<InstanceParams> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "N = {n} too small for a tree"
        )));
    }
    let k = (2.0 * (n as f64).log2()).floor() as usize;
    let d = tree_expander_params(n, k, 1.0, TREE_DEGREE_CONSTANT, 1.0)?.d;
    Ok(InstanceParams {
        k,
        d,
        n_groups: None,
        g: None,
        plain_budget: k,
    })
}

/// Tree-sparse instance with fixed `k = 16` and `d = 6` regardless of `N`.
pub fn fixed_d_instance(n: usize, seed: u64) -> Result<Instance> {
    let params = fixed_d_params(n)?;
    let model = ModelSpec::Tree(TreeModel::complete(n, 2, params.k)?);
    let signal = sample_model_signal(&model, seed);
    Ok(Instance {
        model,
        signal,
        params,
    })
}

fn fixed_d_params(n: usize) -> Result<InstanceParams> {
    if n < FIXED_D_SPARSITY {
        return Err(Error::InvalidParameter(format!(
            "N = {n} smaller than k = 16"
        )));
    }
    Ok(InstanceParams {
        k: FIXED_D_SPARSITY,
        d: FIXED_D_DEGREE,
        n_groups: None,
        g: None,
        plain_budget: FIXED_D_SPARSITY,
    })
}

pub fn instance_params(family: Family, n: usize) -> Result<InstanceParams> {
    match family {
        Family::Block => block_params(n),
        Family::Tree => tree_params(n),
        Family::FixedD => fixed_d_params(n),
    }
}

pub fn instance(family: Family, n: usize, seed: u64) -> Result<Instance> {
    match family {
        Family::Block => block_instance(n, seed),
        Family::Tree => tree_instance(n, seed),
        Family::FixedD => fixed_d_instance(n, seed),
    }
}

/// The ascending sketch lengths tried for one problem size.
///
/// Trees sweep `m ∈ [2k, 10 k log2 N]`; blocks sweep from the total sparsity
/// `k g` to `10 k g log2 N`. The default step is `k`. Grid points below `d`
/// are dropped since a `d`-regular column needs `m >= d` rows.
pub fn m_grid(family: Family, n: usize, spec: &MGrid) -> Result<Vec<usize>> {
    let p = instance_params(family, n)?;
    let log2n = (n as f64).log2();
    let (start, end) = match family {
        Family::Block => {
            let s = p.k * p.g.unwrap_or(1);
            (s, (10.0 * s as f64 * log2n).floor() as usize)
        }
        Family::Tree | Family::FixedD => (2 * p.k, (10.0 * p.k as f64 * log2n).floor() as usize),
    };
    let (start, end) = (spec.start.unwrap_or(start), spec.end.unwrap_or(end));
    let step = spec.step.unwrap_or(p.k).max(1);
    Ok((start..=end).step_by(step).filter(|&m| m >= p.d).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub n: usize,
    pub m: usize,
    pub algorithm: Algorithm,
    pub trial: usize,
    pub relative_error: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n: usize,
    pub algorithm: Algorithm,
    pub m_star: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub algorithm: Algorithm,
    pub m: usize,
    pub median_error: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutcome {
    pub records: Vec<SweepRecord>,
    pub summary: Vec<SummaryRow>,
    pub curve: Vec<CurvePoint>,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes the master seed together with a list of coordinates into a stream seed.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(seed), |h, &p| mix(h ^ mix(p)))
}

const SIGNAL_TAG: u64 = 0x5349_474E;
const MATRIX_TAG: u64 = 0x4D41_5452;

/// Signal of trial `t`, shared by every `m` and every decoder.
pub fn signal_seed(seed: u64, family: Family, n: usize, trial: usize) -> u64 {
    derive_seed(seed, &[family.code(), n as u64, SIGNAL_TAG, trial as u64])
}

/// Matrix of trial `t` at sketch length `m`, shared by every decoder.
pub fn matrix_seed(seed: u64, family: Family, n: usize, m: usize, trial: usize) -> u64 {
    derive_seed(
        seed,
        &[family.code(), n as u64, MATRIX_TAG, m as u64, trial as u64],
    )
}

/// Runs one trial and returns its record.
pub fn run_trial(
    config: &ExperimentConfig,
    n: usize,
    m: usize,
    algorithm: Algorithm,
    trial: usize,
) -> Result<SweepRecord> {
    let start = Instant::now();
    let inst = instance(
        config.family,
        n,
        signal_seed(config.seed, config.family, n, trial),
    )?;
    let a = SparseBinaryMatrix::random(
        n,
        m,
        inst.params.d,
        matrix_seed(config.seed, config.family, n, m, trial),
    )?;
    let d = a.degree() as f64;
    // Sketch with the column-normalized matrix A / d.
    let sketch: Vec<f64> = a.apply(&inst.signal)?.into_iter().map(|v| v / d).collect();
    let plain = ModelSpec::plain(n, inst.params.plain_budget);
    let model = match algorithm {
        Algorithm::Meiht => &inst.model,
        Algorithm::Eiht | Algorithm::Smp => &plain,
    };
    let problem = SketchProblem::from_normalized(&a, sketch, model)?;
    let rc = RecoveryConfig {
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
        ..Default::default()
    };
    let result = recover(algorithm, &problem, &rc)?;
    let err: f64 = result
        .estimate
        .iter()
        .zip(&inst.signal)
        .map(|(a, b)| (a - b).abs())
        .sum();
    let norm: f64 = inst.signal.iter().map(|v| v.abs()).sum();
    Ok(SweepRecord {
        n,
        m,
        algorithm,
        trial,
        relative_error: err / norm,
        iterations: result.iterations,
        stop_reason: result.stop_reason,
        wall_time: config
            .record_wall_time
            .then(|| start.elapsed().as_secs_f64()),
    })
}

/// All trials of one `(N, m, decoder)` cell, ordered by trial.
pub fn run_cell(
    config: &ExperimentConfig,
    n: usize,
    m: usize,
    algorithm: Algorithm,
) -> Result<Vec<SweepRecord>> {
    (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, n, m, algorithm, t))
        .collect()
}

/// Median with the two middle values averaged for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let len = v.len();
    if len == 0 {
        return f64::NAN;
    }
    if len % 2 == 1 {
        v[len / 2]
    } else {
        0.5 * (v[len / 2 - 1] + v[len / 2])
    }
}

/// Sweeps the grid for one `(N, decoder)` pair. Returns `m*` (or `None`), the
/// trial records and the median-error curve of the grid points visited.
pub fn find_min_samples(
    config: &ExperimentConfig,
    n: usize,
    algorithm: Algorithm,
) -> Result<(Option<usize>, Vec<SweepRecord>, Vec<CurvePoint>)> {
    let grid = m_grid(config.family, n, &config.m_grid)?;
    if grid.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "m grid for N = {n} is empty"
        )));
    }
    let mut m_star = None;
    let mut records = Vec::new();
    let mut curve = Vec::new();
    for m in grid {
        let cell = run_cell(config, n, m, algorithm)?;
        let errors: Vec<f64> = cell.iter().map(|r| r.relative_error).collect();
        let med = median(&errors);
        records.extend(cell);
        curve.push(CurvePoint {
            n,
            algorithm,
            m,
            median_error: med,
        });
        if med < config.success_threshold && m_star.is_none() {
            m_star = Some(m);
            if !config.full_curve {
                break;
            }
        }
    }
    Ok((m_star, records, curve))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let cells: Vec<(usize, Algorithm)> = config
        .n_values
        .iter()
        .flat_map(|&n| config.algorithms.iter().map(move |&a| (n, a)))
        .collect();
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(n, alg)| find_min_samples(config, n, alg).map(|r| (n, alg, r)))
        .collect::<Result<_>>()?;
    let mut out = ExperimentOutcome::default();
    for (n, algorithm, (m_star, records, curve)) in results {
        out.summary.push(SummaryRow {
            n,
            algorithm,
            m_star,
        });
        out.records.extend(records);
        out.curve.extend(curve);
    }
    out.records
        .sort_by_key(|r| (r.n, r.algorithm, r.m, r.trial));
    out.summary.sort_by_key(|r| (r.n, r.algorithm));
    out.curve.sort_by_key(|c| (c.n, c.algorithm, c.m));
    Ok(out)
}

/// The fixed-degree experiment: `k = 16`, `d = 6` for every `N`.
pub fn run_fixed_d(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    if config.family != Family::FixedD {
        return Err(Error::InvalidParameter(format!(
            "run_fixed_d needs the fixed_d family, got {}",
            config.family.name()
        )));
    }
    run_experiment(config)
}

pub fn raw_csv(records: &[SweepRecord]) -> String {
    let mut s = String::from("n,m,algorithm,trial,relative_error,iterations,wall_time\n");
    for r in records {
        let wall = r.wall_time.map(|t| format!("{t:.6}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{:e},{},{}",
            r.n, r.m, r.algorithm, r.trial, r.relative_error, r.iterations, wall
        );
    }
    s
}

/// `m_star` is -1 when no grid point succeeded.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("n,algorithm,m_star\n");
    for r in rows {
        let m = r.m_star.map(|m| m as i64).unwrap_or(-1);
        let _ = writeln!(s, "{},{},{}", r.n, r.algorithm, m);
    }
    s
}

pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut s = String::from("n,algorithm,m,median_relative_error\n");
    for c in curve {
        let _ = writeln!(s, "{},{},{},{:e}", c.n, c.algorithm, c.m, c.median_error);
    }
    s
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    config: &'a ExperimentConfig,
    sizes: Vec<SizeEcho>,
}

#[derive(Serialize)]
struct SizeEcho {
    n: usize,
    params: InstanceParams,
    m_start: usize,
    m_end: usize,
    m_step: usize,
}

pub fn config_echo(config: &ExperimentConfig) -> Result<String> {
    let sizes = config
        .n_values
        .iter()
        .map(|&n| {
            let params = instance_params(config.family, n)?;
            let grid = m_grid(config.family, n, &config.m_grid)?;
            Ok(SizeEcho {
                n,
                params,
                m_start: grid.first().copied().unwrap_or(0),
                m_end: grid.last().copied().unwrap_or(0),
                m_step: config.m_grid.step.unwrap_or(params.k),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = serde_json::to_string_pretty(&ConfigEcho { config, sizes })
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes `raw.csv`, `summary.csv`, `curve.csv` and `config.echo` into `dir`.
pub fn emit_results(
    outcome: &ExperimentOutcome,
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(&dir.join("raw.csv"), &raw_csv(&outcome.records))?;
    write_text(&dir.join("summary.csv"), &summary_csv(&outcome.summary))?;
    write_text(&dir.join("curve.csv"), &curve_csv(&outcome.curve))?;
    write_text(&dir.join("config.echo"), &config_echo(config)?)?;
    Ok(())
}
