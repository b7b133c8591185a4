mod config;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use expander_sketch::expander::{verify_model_expansion, EdgePolicy, VerifyMode, VerifyOptions};
use expander_sketch::harness::{self, ExperimentConfig, Family};
use expander_sketch::io::{read_parsed, read_text, read_vector, write_text, write_vector};
use expander_sketch::models::{sample_model_signal, DEFAULT_ENUMERATION_CAP};
use expander_sketch::projection::{model_sigma, project};
use expander_sketch::recovery::{recover, Algorithm, RecoveryConfig, SketchProblem};
use expander_sketch::{ModelSpec, SparseBinaryMatrix};

use crate::config::{parse_overrides, ListOr, Overrides};

#[derive(Parser)]
#[command(
    name = "xsketch",
    version,
    about = "Model-based sparse recovery from expander sketches"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random d-left-regular sketching matrix.
    GenMatrix {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reject repeated right nodes within a column.
        #[arg(long)]
        simple: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure model expansion of a matrix and print the report as JSON.
    VerifyExpander {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Enumerate every model-sparse set (the default).
        #[arg(long, conflicts_with = "samples")]
        exhaustive: bool,
        /// Check this many sampled sets instead; the result is a lower bound.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Inspect or sample from a sparsity model file.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Project a signal onto a model and write the projection.
    Project {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover a signal from its sketch.
    Recover {
        #[arg(long)]
        algo: Algorithm,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        sketch: PathBuf,
        /// The sketch was taken with the column-normalized matrix A/d.
        #[arg(long)]
        normalized: bool,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a minimum-sketch-length sweep.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand)]
enum ModelAction {
    /// Parse and check a model file.
    Validate { path: PathBuf },
    /// Draw a random model-sparse signal.
    Sample {
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// block, tree or fixed-d
    family: Family,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    m_start: Option<usize>,
    #[arg(long)]
    m_end: Option<usize>,
    #[arg(long)]
    m_step: Option<usize>,
    /// Comma-separated subset of eiht,meiht,smp.
    #[arg(long)]
    algos: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stop each sweep at the first successful m instead of running the whole grid.
    #[arg(long)]
    first_crossing: bool,
    /// Record per-trial wall time (makes raw.csv non-reproducible).
    #[arg(long)]
    wall_time: bool,
    /// Config file whose entries override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenMatrix {
            n,
            m,
            d,
            seed,
            simple,
            out,
        } => {
            let policy = if simple {
                EdgePolicy::Simple
            } else {
                EdgePolicy::Multigraph
            };
            let a = SparseBinaryMatrix::random_with_policy(n, m, d, seed, policy)?;
            write_text(&out, &a.to_string())?;
        }
        Command::VerifyExpander {
            matrix,
            model,
            exhaustive: _,
            samples,
            cap,
            seed,
        } => {
            let a: SparseBinaryMatrix = read_parsed(&matrix)?;
            let model: ModelSpec = read_parsed(&model)?;
            let mode = match samples {
                Some(samples) => VerifyMode::Sampled { samples },
                None => VerifyMode::Exhaustive { cap },
            };
            let opts = VerifyOptions {
                mode,
                seed,
                ..Default::default()
            };
            let report = verify_model_expansion(&a, &model, &opts)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Model { action } => match action {
            ModelAction::Validate { path } => {
                let model: ModelSpec = read_parsed(&path)?;
                println!("ok {} N={} k={}", model.kind(), model.n(), model.budget());
            }
            ModelAction::Sample { path, seed, out } => {
                let model: ModelSpec = read_parsed(&path)?;
                write_vector(&out, &sample_model_signal(&model, seed))?;
            }
        },
        Command::Project { model, signal, out } => {
            let model: ModelSpec = read_parsed(&model)?;
            let x = read_vector(&signal)?;
            let p = project(&x, &model)?;
            let sigma = model_sigma(&x, &model)?;
            write_vector(&out, &p.projected)?;
            println!("{} {} {}", p.support.len(), p.covered_weight, sigma);
        }
        Command::Recover {
            algo,
            matrix,
            model,
            sketch,
            normalized,
            max_iters,
            tol,
            out,
        } => {
            let a: SparseBinaryMatrix = read_parsed(&matrix)?;
            let model: ModelSpec = read_parsed(&model)?;
            let y = read_vector(&sketch)?;
            let problem = if normalized {
                SketchProblem::from_normalized(&a, y, &model)?
            } else {
                SketchProblem::new(&a, y, &model)?
            };
            let config = RecoveryConfig {
                max_iterations: max_iters,
                tolerance: tol,
                ..Default::default()
            };
            let r = recover(algo, &problem, &config)?;
            write_vector(&out, &r.estimate)?;
            println!("{} {} {}", r.iterations, r.stop_reason, r.final_residual());
        }
        Command::Experiment(args) => run_experiment(args)?,
    }
    Ok(())
}

fn run_experiment(args: ExperimentArgs) -> Result<()> {
    let mut config = ExperimentConfig::new(args.family);
    let flags = Overrides {
        n_min: args.n_min,
        n_max: args.n_max,
        trials: args.trials,
        seed: args.seed,
        threshold: args.threshold,
        m_start: args.m_start,
        m_end: args.m_end,
        m_step: args.m_step,
        algos: args.algos.map(ListOr::Text),
        max_iterations: args.max_iters,
        full_curve: args.first_crossing.then_some(false),
        record_wall_time: args.wall_time.then_some(true),
        ..Default::default()
    };
    flags.apply(&mut config)?;
    if let Some(path) = &args.config {
        let text = read_text(path)?;
        parse_overrides(&text)
            .with_context(|| format!("reading config {}", path.display()))?
            .apply(&mut config)?;
    }
    if config.n_values.is_empty() {
        bail!("no problem sizes selected");
    }
    let outcome = harness::run_experiment(&config)?;
    harness::emit_results(&outcome, &config, Path::new(&args.out))?;
    for row in &outcome.summary {
        let m = row.m_star.map(|m| m as i64).unwrap_or(-1);
        println!("{} {} {}", row.n, row.algorithm, m);
    }
    Ok(())
}
