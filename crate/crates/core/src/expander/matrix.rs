//! Sparse binary sketching matrices with a fixed number of ones per column.
//!
//! A matrix is stored as the adjacency of a `d`-left-regular bipartite
//! multigraph: every left (signal) node owns exactly `degree` edges into the
//! right (measurement) nodes. Repeated edges are kept, so a column may hold the
//! same row index more than once and the corresponding entry of `A` is then the
//! multiplicity rather than 1.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// How repeated check nodes inside one column are treated during sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgePolicy {
    /// Draw `d` check nodes with replacement; duplicates stay as parallel edges.
    #[default]
    Multigraph,
    /// Draw `d` distinct check nodes per column.
    Simple,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinaryMatrix {
    n_left: usize,
    n_right: usize,
    degree: usize,
    /// Column-major edge list, `degree` entries per left node.
    edges: Vec<usize>,
}

/// Neighborhood statistics of a set of left nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NeighborCounts {
    /// `|Γ(S)|`, distinct right nodes touched by `S`.
    pub total: usize,
    /// `|Γ'(S)|`, right nodes hit by exactly one edge from `S`.
    pub unique: usize,
    /// `|Γ''(S)|`, right nodes hit by two or more edges from `S`.
    pub collisions: usize,
}

impl SparseBinaryMatrix {
    /// Builds a matrix from explicit columns. Every column must hold exactly
    /// `degree` row indices below `n_right`.
    pub fn from_columns(n_right: usize, degree: usize, columns: &[Vec<usize>]) -> Result<Self> {
        if n_right == 0 || degree == 0 {
            return Err(Error::InvalidParameter(
                "n_right and degree must be positive".into(),
            ));
        }
        if columns.is_empty() {
            return Err(Error::InvalidParameter(
                "matrix needs at least one column".into(),
            ));
        }
        let mut edges = Vec::with_capacity(columns.len() * degree);
        for (i, col) in columns.iter().enumerate() {
            if col.len() != degree {
                return Err(Error::InvalidParameter(format!(
                    "column {i} has {} entries, expected {degree}",
                    col.len()
                )));
            }
            for &j in col {
                if j >= n_right {
                    return Err(Error::IndexOutOfRange {
                        index: j,
                        bound: n_right,
                    });
                }
            }
            edges.extend_from_slice(col);
        }
        Ok(SparseBinaryMatrix {
            n_left: columns.len(),
            n_right,
            degree,
            edges,
        })
    }

    /// Samples a random matrix: each column draws `degree` check nodes
    /// uniformly with replacement. Deterministic in `seed`.
    pub fn random(n_left: usize, n_right: usize, degree: usize, seed: u64) -> Result<Self> {
        Self::random_with_policy(n_left, n_right, degree, seed, EdgePolicy::Multigraph)
    }

    pub fn random_with_policy(
        n_left: usize,
        n_right: usize,
        degree: usize,
        seed: u64,
        policy: EdgePolicy,
    ) -> Result<Self> {
        if n_left == 0 || n_right == 0 || degree == 0 {
            return Err(Error::InvalidParameter(
                "n_left, n_right and degree must be positive".into(),
            ));
        }
        if policy == EdgePolicy::Simple && degree > n_right {
            return Err(Error::InvalidParameter(format!(
                "degree {degree} exceeds n_right {n_right} without duplicate edges"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::with_capacity(n_left * degree);
        for _ in 0..n_left {
            match policy {
                EdgePolicy::Multigraph => {
                    for _ in 0..degree {
                        edges.push(rng.random_range(0..n_right));
                    }
                }
                EdgePolicy::Simple => {
                    edges.extend(index::sample(&mut rng, n_right, degree));
                }
            }
        }
        Ok(SparseBinaryMatrix {
            n_left,
            n_right,
            degree,
            edges,
        })
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// The edge multiset `Γ(i)` of left node `i`.
    pub fn column(&self, i: usize) -> &[usize] {
        &self.edges[i * self.degree..(i + 1) * self.degree]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[usize]> {
        self.edges.chunks_exact(self.degree)
    }

    /// Computes `y = A x`, counting repeated edges with their multiplicity.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_right];
        self.apply_into(x, &mut y)?;
        Ok(y)
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.check_left(x.len())?;
        self.check_right(y.len())?;
        y.fill(0.0);
        for (col, &xi) in self.columns().zip(x) {
            if xi != 0.0 {
                for &j in col {
                    y[j] += xi;
                }
            }
        }
        Ok(())
    }

    /// Same as [`apply`](Self::apply) but touches only the listed coordinates of `x`.
    pub(crate) fn apply_support_into(&self, x: &[f64], support: &[usize], y: &mut [f64]) {
        y.fill(0.0);
        for &i in support {
            let xi = x[i];
            for &j in self.column(i) {
                y[j] += xi;
            }
        }
    }

    /// Counts `|Γ(S)|`, `|Γ'(S)|` and `|Γ''(S)|` for the left set `s`.
    ///
    /// Duplicate entries in `s` are ignored. A right node reached twice by the
    /// same column counts as a collision.
    pub fn neighbors(&self, s: &[usize]) -> Result<NeighborCounts> {
        for &i in s {
            if i >= self.n_left {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    bound: self.n_left,
                });
            }
        }
        let mut set: Vec<usize> = s.to_vec();
        set.sort_unstable();
        set.dedup();
        let mut scratch = NeighborScratch::new(self.n_right);
        Ok(scratch.count(self, &set))
    }

    pub(crate) fn check_left(&self, len: usize) -> Result<()> {
        if len != self.n_left {
            return Err(Error::DimensionMismatch {
                expected: self.n_left,
                actual: len,
            });
        }
        Ok(())
    }

    pub(crate) fn check_right(&self, len: usize) -> Result<()> {
        if len != self.n_right {
            return Err(Error::DimensionMismatch {
                expected: self.n_right,
                actual: len,
            });
        }
        Ok(())
    }
}

/// Reusable hit counters for repeated neighborhood queries on one matrix.
pub(crate) struct NeighborScratch {
    hits: Vec<u32>,
    touched: Vec<usize>,
}

impl NeighborScratch {
    pub(crate) fn new(n_right: usize) -> Self {
        NeighborScratch {
            hits: vec![0; n_right],
            touched: Vec::new(),
        }
    }

    /// `set` must be free of duplicates and in range.
    pub(crate) fn count(&mut self, a: &SparseBinaryMatrix, set: &[usize]) -> NeighborCounts {
        for &i in set {
            for &j in a.column(i) {
                if self.hits[j] == 0 {
                    self.touched.push(j);
                }
                self.hits[j] += 1;
            }
        }
        let mut counts = NeighborCounts {
            total: self.touched.len(),
            ..Default::default()
        };
        for &j in &self.touched {
            if self.hits[j] == 1 {
                counts.unique += 1;
            } else {
                counts.collisions += 1;
            }
            self.hits[j] = 0;
        }
        self.touched.clear();
        counts
    }

    /// Marks `Γ(set)` and returns it sorted; resets internal state.
    pub(crate) fn neighborhood(&mut self, a: &SparseBinaryMatrix, set: &[usize]) -> Vec<usize> {
        for &i in set {
            for &j in a.column(i) {
                if self.hits[j] == 0 {
                    self.touched.push(j);
                }
                self.hits[j] += 1;
            }
        }
        let mut out: Vec<usize> = self.touched.drain(..).collect();
        for &j in &out {
            self.hits[j] = 0;
        }
        out.sort_unstable();
        out
    }
}

/// Text format: a header line `N m d` followed by one line per column holding
/// its `d` zero-based row indices.
impl fmt::Display for SparseBinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} {}", self.n_left, self.n_right, self.degree)?;
        for col in self.columns() {
            let mut first = true;
            for j in col {
                if !first {
                    f.write_str(" ")?;
                }
                write!(f, "{j}")?;
                first = false;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

impl FromStr for SparseBinaryMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing header"))?;
        let dims = parse_usizes(header, 1)?;
        if dims.len() != 3 {
            return Err(Error::parse(1, "header must be `N m d`"));
        }
        let (n, m, d) = (dims[0], dims[1], dims[2]);
        if n == 0 || m == 0 || d == 0 {
            return Err(Error::parse(1, "N, m and d must be positive"));
        }
        let mut columns = Vec::with_capacity(n);
        for (idx, line) in lines {
            let lineno = idx + 1;
            if columns.len() == n {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::parse(lineno, format!("more than {n} column lines")));
            }
            let col = parse_usizes(line, lineno)?;
            if col.len() != d {
                return Err(Error::parse(
                    lineno,
                    format!("expected {d} indices, found {}", col.len()),
                ));
            }
            if let Some(&bad) = col.iter().find(|&&j| j >= m) {
                return Err(Error::parse(lineno, format!("row index {bad} >= m = {m}")));
            }
            columns.push(col);
        }
        if columns.len() != n {
            return Err(Error::parse(
                columns.len() + 2,
                format!("expected {n} column lines, found {}", columns.len()),
            ));
        }
        SparseBinaryMatrix::from_columns(m, d, &columns)
    }
}

fn parse_usizes(line: &str, lineno: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| Error::parse(lineno, format!("not a nonnegative integer: `{tok}`")))
        })
        .collect()
}
