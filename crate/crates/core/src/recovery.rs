//! Median-based iterative decoders for expander sketches: SMP, EIHT and the
//! model-projected variant MEIHT, plus the constants of their convergence
//! analysis and a numerical check of the median error bound.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expander::{ExpansionReport, NeighborScratch, SparseBinaryMatrix};
use crate::models::ModelSpec;
use crate::projection::{hard_threshold, project, ProjectionResult};

/// A sketch `y = A x + e` together with the model the unknown `x` belongs to.
#[derive(Debug, Clone)]
pub struct SketchProblem<'a> {
    pub matrix: &'a SparseBinaryMatrix,
    pub sketch: Vec<f64>,
    pub model: &'a ModelSpec,
}

impl<'a> SketchProblem<'a> {
    pub fn new(
        matrix: &'a SparseBinaryMatrix,
        sketch: Vec<f64>,
        model: &'a ModelSpec,
    ) -> Result<Self> {
        matrix.check_right(sketch.len())?;
        matrix.check_left(model.n())?;
        Ok(SketchProblem {
            matrix,
            sketch,
            model,
        })
    }

    /// For a sketch taken with column-normalized `A / d`: rescales it by `d` so
    /// the decoders can run on the binary matrix.
    pub fn from_normalized(
        matrix: &'a SparseBinaryMatrix,
        sketch: Vec<f64>,
        model: &'a ModelSpec,
    ) -> Result<Self> {
        let d = matrix.degree() as f64;
        Self::new(matrix, sketch.into_iter().map(|v| v * d).collect(), model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Smp,
    Eiht,
    Meiht,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Smp => "smp",
            Algorithm::Eiht => "eiht",
            Algorithm::Meiht => "meiht",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "smp" => Ok(Algorithm::Smp),
            "eiht" => Ok(Algorithm::Eiht),
            "meiht" => Ok(Algorithm::Meiht),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryConfig {
    pub max_iterations: usize,
    /// Stop once `||x^{n+1} - x^n||_1 <= tolerance * ||x^{n+1}||_1`.
    pub tolerance: f64,
    /// Stop once `||y - A x^{n+1}||_1 <= residual_tolerance`.
    pub residual_tolerance: f64,
    /// Starting iterate; all zeros when `None`.
    pub initial: Option<Vec<f64>>,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            max_iterations: 500,
            tolerance: 1e-7,
            residual_tolerance: 0.0,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    Residual,
    MaxIterations,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Tolerance => "tolerance",
            StopReason::Residual => "residual",
            StopReason::MaxIterations => "max_iterations",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub estimate: Vec<f64>,
    pub iterations: usize,
    /// `||y - A x^n||_1` after each iteration `n = 1..=iterations`.
    pub residual_history: Vec<f64>,
    pub stop_reason: StopReason,
}

impl RecoveryResult {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// Coordinate-wise median of the sketch over each column's neighbors:
/// entry `i` is the `⌈d/2⌉`-th largest of `{u_j : j ∈ Γ(i)}`, counted with
/// edge multiplicity. For even `d` this is the upper of the two middle values.
pub fn median_operator(a: &SparseBinaryMatrix, u: &[f64]) -> Result<Vec<f64>> {
    a.check_right(u.len())?;
    let mut out = vec![0.0; a.n_left()];
    median_into(a, u, &mut out);
    Ok(out)
}

fn median_into(a: &SparseBinaryMatrix, u: &[f64], out: &mut [f64]) {
    let d = a.degree();
    let rank = d.div_ceil(2) - 1;
    let mut buf = vec![0.0; d];
    for (col, o) in a.columns().zip(out.iter_mut()) {
        for (b, &j) in buf.iter_mut().zip(col) {
            *b = u[j];
        }
        let (_, v, _) = buf.select_nth_unstable_by(rank, |p, q| q.total_cmp(p));
        *o = *v;
    }
}

/// Iterates `x ← H_k(x + H_{2k}(M(y - A x)))`.
pub fn smp_recover(problem: &SketchProblem<'_>, config: &RecoveryConfig) -> Result<RecoveryResult> {
    recover(Algorithm::Smp, problem, config)
}

/// Iterates `x ← H_k(x + M(y - A x))`.
pub fn eiht_recover(
    problem: &SketchProblem<'_>,
    config: &RecoveryConfig,
) -> Result<RecoveryResult> {
    recover(Algorithm::Eiht, problem, config)
}

/// Iterates `x ← P_{M_k}(x + M(y - A x))` with the exact ℓ1 model projection.
/// Every iterate is model-sparse.
pub fn meiht_recover(
    problem: &SketchProblem<'_>,
    config: &RecoveryConfig,
) -> Result<RecoveryResult> {
    recover(Algorithm::Meiht, problem, config)
}

pub fn recover(
    algorithm: Algorithm,
    problem: &SketchProblem<'_>,
    config: &RecoveryConfig,
) -> Result<RecoveryResult> {
    recover_observed(algorithm, problem, config, |_, _| {})
}

/// Runs a decoder and calls `observe(n, x^n)` after every iteration.
pub fn recover_observed<F: FnMut(usize, &[f64])>(
    algorithm: Algorithm,
    problem: &SketchProblem<'_>,
    config: &RecoveryConfig,
    mut observe: F,
) -> Result<RecoveryResult> {
    let a = problem.matrix;
    let y = &problem.sketch;
    let n = a.n_left();
    if config.max_iterations == 0 {
        return Err(Error::InvalidParameter(
            "max_iterations must be at least 1".into(),
        ));
    }
    let k = match (algorithm, problem.model) {
        (Algorithm::Meiht, _) => problem.model.budget(),
        (_, ModelSpec::Plain(p)) => p.budget,
        (alg, other) => {
            return Err(Error::InvalidModel(format!(
                "{alg} needs a plain sparsity model, got a {} model",
                other.kind()
            )))
        }
    };

    let mut x = match &config.initial {
        Some(init) => {
            a.check_left(init.len())?;
            init.clone()
        }
        None => vec![0.0; n],
    };
    let mut support: Vec<usize> = (0..n).filter(|&i| x[i] != 0.0).collect();
    let mut ax = vec![0.0; a.n_right()];
    let mut residual = vec![0.0; a.n_right()];
    let mut med = vec![0.0; n];
    let mut history = Vec::new();

    a.apply_support_into(&x, &support, &mut ax);
    for (r, (yv, av)) in residual.iter_mut().zip(y.iter().zip(&ax)) {
        *r = yv - av;
    }

    let mut iteration = 0;
    let stop_reason = loop {
        iteration += 1;
        median_into(a, &residual, &mut med);
        let next: ProjectionResult = match algorithm {
            Algorithm::Smp => {
                let step = hard_threshold(&med, 2 * k);
                let mut w = x.clone();
                for &i in &step.support {
                    w[i] += step.projected[i];
                }
                hard_threshold(&w, k)
            }
            Algorithm::Eiht => {
                let w: Vec<f64> = x.iter().zip(&med).map(|(xi, mi)| xi + mi).collect();
                hard_threshold(&w, k)
            }
            Algorithm::Meiht => {
                let w: Vec<f64> = x.iter().zip(&med).map(|(xi, mi)| xi + mi).collect();
                project(&w, problem.model)?
            }
        };

        let change: f64 = x
            .iter()
            .zip(&next.projected)
            .map(|(p, q)| (p - q).abs())
            .sum();
        let size: f64 = next.projected.iter().map(|v| v.abs()).sum();
        x = next.projected;
        support = next.support;

        a.apply_support_into(&x, &support, &mut ax);
        let mut res_norm = 0.0;
        for (r, (yv, av)) in residual.iter_mut().zip(y.iter().zip(&ax)) {
            *r = yv - av;
            res_norm += r.abs();
        }
        history.push(res_norm);
        observe(iteration, &x);

        if res_norm <= config.residual_tolerance {
            break StopReason::Residual;
        }
        if change <= config.tolerance * size {
            break StopReason::Tolerance;
        }
        if iteration >= config.max_iterations {
            break StopReason::MaxIterations;
        }
    };

    Ok(RecoveryResult {
        estimate: x,
        iterations: iteration,
        residual_history: history,
        stop_reason,
    })
}

/// Constants of the geometric error decay for an expansion coefficient
/// `ε = ε_{M_3k}` and left degree `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceConstants {
    pub epsilon_3k: f64,
    /// `8ε / (1 - 4ε)`; below 1 exactly when `ε < 1/12`.
    pub alpha: f64,
    /// `4 / ((1 - 12ε) d)`, infinite once `ε >= 1/12`.
    pub beta: f64,
    /// `1 + β d`.
    pub c1: f64,
    /// `β`.
    pub c2: f64,
}

impl ConvergenceConstants {
    pub fn contracts(&self) -> bool {
        self.alpha < 1.0
    }
}

pub fn convergence_constants(epsilon_3k: f64, d: usize) -> ConvergenceConstants {
    // Written in t = 12ε so that the threshold ε = 1/12 maps to t = 1 exactly:
    // α = 8ε/(1-4ε) = 2t/(3-t), β = 4/((1-t) d).
    let t = 12.0 * epsilon_3k;
    let alpha = if t < 3.0 {
        2.0 * t / (3.0 - t)
    } else {
        f64::INFINITY
    };
    let beta = if t < 1.0 {
        4.0 / ((1.0 - t) * d as f64)
    } else {
        f64::INFINITY
    };
    ConvergenceConstants {
        epsilon_3k,
        alpha,
        beta,
        c1: 1.0 + beta * d as f64,
        c2: beta,
    }
}

/// Both sides of the median error bound for one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianBound {
    /// `||[M(A x_S + e) - x]_S||_1`
    pub lhs: f64,
    /// `4ε/(1-4ε) ||x_S||_1 + 2/((1-4ε) d) ||e_{Γ(S)}||_1`
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the median error bound on a model-sparse set `s`, using the
/// exhaustively verified expansion coefficient in `report` for `model`.
///
/// Refuses sampled (unverified) coefficients, sets outside the model, and
/// coefficients outside `4εd < d + 1` or `ε >= 1/4` where the bound is vacuous.
pub fn median_lemma_check(
    a: &SparseBinaryMatrix,
    model: &ModelSpec,
    report: &ExpansionReport,
    s: &[usize],
    x: &[f64],
    e: &[f64],
) -> Result<MedianBound> {
    if !report.exhaustive {
        return Err(Error::Unverified);
    }
    if report.budget != model.budget() {
        return Err(Error::InvalidParameter(format!(
            "report is for order {}, model has order {}",
            report.budget,
            model.budget()
        )));
    }
    a.check_left(x.len())?;
    a.check_right(e.len())?;
    if !model.is_member(s)? {
        return Err(Error::InvalidParameter("set is not model-sparse".into()));
    }
    let eps = report.epsilon;
    let d = a.degree() as f64;
    if 4.0 * eps * d >= d + 1.0 {
        return Err(Error::Hypothesis(format!(
            "4εd < d + 1 fails for ε = {eps}, d = {d}"
        )));
    }
    if 4.0 * eps >= 1.0 {
        return Err(Error::Hypothesis(format!(
            "ε = {eps} >= 1/4 leaves the bound vacuous"
        )));
    }

    let mut set = s.to_vec();
    set.sort_unstable();
    set.dedup();
    let mut v = e.to_vec();
    for &i in &set {
        for &j in a.column(i) {
            v[j] += x[i];
        }
    }
    let med = median_operator(a, &v)?;
    let lhs: f64 = set.iter().map(|&i| (med[i] - x[i]).abs()).sum();

    let x_norm: f64 = set.iter().map(|&i| x[i].abs()).sum();
    let gamma = NeighborScratch::new(a.n_right()).neighborhood(a, &set);
    let e_norm: f64 = gamma.iter().map(|&j| e[j].abs()).sum();
    let rhs = 4.0 * eps / (1.0 - 4.0 * eps) * x_norm + 2.0 / ((1.0 - 4.0 * eps) * d) * e_norm;
    // round-off allowance on the order of a few ulps of the quantities involved
    let slack = 1e-12 * (d * x_norm + e.iter().map(|v| v.abs()).sum::<f64>() + 1.0);
    Ok(MedianBound {
        lhs,
        rhs,
        holds: lhs <= rhs + slack,
    })
}
