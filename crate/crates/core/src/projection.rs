//! Exact ℓ1 projections onto sparsity models.
//!
//! Projecting `x` in the ℓ1 norm onto a model reduces to picking the model set
//! `S` that maximizes `||x_S||_1` and copying `x` on `S`. Plain sparsity is
//! solved by hard thresholding; rooted subtrees and loopless group covers by
//! dynamic programs over the tree and the group forest.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::models::{self, EnumerateOptions, GroupModel, ModelSpec, TreeModel};

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    /// Selected model set, sorted ascending.
    pub support: Vec<usize>,
    /// `x` on `support`, zero elsewhere.
    pub projected: Vec<f64>,
    /// `Σ_{i ∈ support} |x_i|`, summed in ascending index order.
    pub covered_weight: f64,
}

impl ProjectionResult {
    fn from_support(x: &[f64], support: Vec<usize>) -> Self {
        let mut projected = vec![0.0; x.len()];
        for &i in &support {
            projected[i] = x[i];
        }
        let covered_weight = covered_weight(x, &support);
        ProjectionResult {
            support,
            projected,
            covered_weight,
        }
    }
}

/// `Σ_{i ∈ support} |x_i|` in the order given.
pub fn covered_weight(x: &[f64], support: &[usize]) -> f64 {
    support.iter().map(|&i| x[i].abs()).sum()
}

/// Keeps the `k` entries of largest magnitude; ties go to the lower index.
pub fn hard_threshold(x: &[f64], k: usize) -> ProjectionResult {
    let n = x.len();
    let k = k.min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    if k < n {
        if k > 0 {
            idx.select_nth_unstable_by(k - 1, |&a, &b| magnitude_order(x, a, b));
        }
        idx.truncate(k);
    }
    idx.sort_unstable();
    ProjectionResult::from_support(x, idx)
}

fn magnitude_order(x: &[f64], a: usize, b: usize) -> Ordering {
    x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b))
}

/// Best rooted connected subtree with at most `budget` nodes.
///
/// Tables are filled from the leaves up: for node `v`, entry `j` is the best
/// weight of a subtree of `v`'s descendants that contains `v` and has exactly
/// `j` nodes. Children are merged one at a time, right to left, by a
/// max-plus convolution truncated at the budget. When every weight is zero the
/// root alone is returned.
pub fn project_tree(x: &[f64], model: &TreeModel) -> Result<ProjectionResult> {
    check_len(x, model.n())?;
    let k = model.budget();
    if k == 0 {
        return Ok(ProjectionResult::from_support(x, Vec::new()));
    }
    let n = model.n();
    let order = model.bfs_order();

    let mut tables: Vec<Vec<f64>> = vec![Vec::new(); n];
    // For each node, one choice vector per merged child (in merge order):
    // entry `j` is how many nodes of the merged table of size `j` came from that child.
    let mut takes: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];

    for &v in order.iter().rev() {
        let mut cur = vec![f64::NEG_INFINITY, x[v].abs()];
        let mut steps = Vec::with_capacity(model.children(v).len());
        for &c in model.children(v).iter().rev() {
            let child = std::mem::take(&mut tables[c]);
            let a = cur.len() - 1;
            let b = child.len() - 1;
            let len = (a + b).min(k);
            let mut next = cur.clone();
            next.resize(len + 1, f64::NEG_INFINITY);
            let mut take = vec![0usize; len + 1];
            for ja in 1..=a {
                let base = cur[ja];
                if base == f64::NEG_INFINITY {
                    continue;
                }
                for jb in 1..=b.min(len - ja) {
                    let cand = base + child[jb];
                    if cand > next[ja + jb] {
                        next[ja + jb] = cand;
                        take[ja + jb] = jb;
                    }
                }
            }
            cur = next;
            steps.push(take);
        }
        tables[v] = cur;
        takes[v] = steps;
    }

    let root = model.root();
    let table = &tables[root];
    let mut best = 1;
    for j in 2..table.len() {
        if table[j] > table[best] {
            best = j;
        }
    }

    let mut support = Vec::with_capacity(best);
    let mut stack = vec![(root, best)];
    while let Some((v, mut j)) = stack.pop() {
        support.push(v);
        let children: Vec<usize> = model.children(v).iter().rev().copied().collect();
        for (step, take) in takes[v].iter().enumerate().rev() {
            let jb = take[j];
            if jb > 0 {
                stack.push((children[step], jb));
                j -= jb;
            }
        }
        debug_assert_eq!(j, 1);
    }
    support.sort_unstable();
    Ok(ProjectionResult::from_support(x, support))
}

/// Best union of at most `budget` groups of a loopless group model.
///
/// Each coordinate is counted once even when two selected groups share it.
pub fn project_group(x: &[f64], model: &GroupModel) -> Result<ProjectionResult> {
    check_len(x, model.n())?;
    let w: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let (selected, _) = group_max_cover(model, &w);
    let mut support: Vec<usize> = selected
        .iter()
        .flat_map(|&g| model.groups()[g].iter().copied())
        .collect();
    support.sort_unstable();
    support.dedup();
    Ok(ProjectionResult::from_support(x, support))
}

/// Weighted maximum coverage over the group forest with nonnegative weights
/// `w`. Returns the selected groups (sorted) and the covered weight.
///
/// State per group is (groups used in its subtree, whether it is selected).
/// Coordinates shared with the forest parent are credited on the edge when
/// either endpoint is selected, so overlaps are never double counted.
pub(crate) fn group_max_cover(model: &GroupModel, w: &[f64]) -> (Vec<usize>, f64) {
    let forest = model.forest();
    let m = model.n_groups();
    let k = model.budget().min(m);
    let own: Vec<f64> = forest
        .own
        .iter()
        .map(|c| c.iter().map(|&i| w[i]).sum())
        .collect();
    let shared: Vec<f64> = forest
        .shared
        .iter()
        .map(|c| c.iter().map(|&i| w[i]).sum())
        .collect();

    // tables[v][s][j]
    let mut tables: Vec<[Vec<f64>; 2]> = vec![[Vec::new(), Vec::new()]; m];
    let mut takes: Vec<Vec<[Vec<usize>; 2]>> = vec![Vec::new(); m];

    for &v in forest.order.iter().rev() {
        let mut cur = [
            vec![0.0, f64::NEG_INFINITY],
            vec![f64::NEG_INFINITY, own[v]],
        ];
        if k == 0 {
            cur[0].truncate(1);
            cur[1].truncate(1);
        }
        let mut steps = Vec::with_capacity(forest.children[v].len());
        for &c in &forest.children[v] {
            let child = &tables[c];
            let mut step: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
            for sp in 0..2 {
                let h = edge_values(child, shared[c], sp == 1);
                let (next, take) = knapsack_merge(&cur[sp], &h, k);
                cur[sp] = next;
                step[sp] = take;
            }
            steps.push(step);
        }
        tables[v] = cur;
        takes[v] = steps;
    }

    // Virtual root over the forest components; it is never selected.
    let mut top = vec![0.0];
    let mut top_takes = Vec::with_capacity(forest.roots.len());
    for &r in &forest.roots {
        let h = edge_values(&tables[r], 0.0, false);
        let (next, take) = knapsack_merge(&top, &h, k);
        top = next;
        top_takes.push(take);
    }
    let mut best = 0;
    for j in 1..top.len() {
        if top[j] > top[best] {
            best = j;
        }
    }
    let value = top[best];

    let mut selected = Vec::new();
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    let mut j = best;
    for (step, take) in top_takes.iter().enumerate().rev() {
        let jc = take[j];
        let r = forest.roots[step];
        let sc = edge_choice(&tables[r], 0.0, false, jc);
        stack.push((r, sc, jc));
        j -= jc;
    }
    while let Some((v, s, mut j)) = stack.pop() {
        if s == 1 {
            selected.push(v);
        }
        for (step, take) in takes[v].iter().enumerate().rev() {
            let jc = take[s][j];
            let c = forest.children[v][step];
            let sc = edge_choice(&tables[c], shared[c], s == 1, jc);
            stack.push((c, sc, jc));
            j -= jc;
        }
    }
    selected.sort_unstable();
    (selected, value)
}

/// Best value of a child subtree using `jc` groups, given the parent state,
/// including the coordinates the child shares with the parent.
fn edge_values(child: &[Vec<f64>; 2], shared: f64, parent_selected: bool) -> Vec<f64> {
    let len = child[0].len().max(child[1].len());
    (0..len)
        .map(|jc| {
            let off = child[0].get(jc).copied().unwrap_or(f64::NEG_INFINITY)
                + if parent_selected { shared } else { 0.0 };
            let on = child[1].get(jc).copied().unwrap_or(f64::NEG_INFINITY) + shared;
            if on > off {
                on
            } else {
                off
            }
        })
        .collect()
}

fn edge_choice(child: &[Vec<f64>; 2], shared: f64, parent_selected: bool, jc: usize) -> usize {
    let off = child[0].get(jc).copied().unwrap_or(f64::NEG_INFINITY)
        + if parent_selected { shared } else { 0.0 };
    let on = child[1].get(jc).copied().unwrap_or(f64::NEG_INFINITY) + shared;
    usize::from(on > off)
}

/// Max-plus convolution truncated at `k`; `take[j]` is the share of `j` taken
/// from `h` (smallest share on ties).
fn knapsack_merge(cur: &[f64], h: &[f64], k: usize) -> (Vec<f64>, Vec<usize>) {
    let len = (cur.len() + h.len() - 2).min(k) + 1;
    let mut next = vec![f64::NEG_INFINITY; len];
    let mut take = vec![0usize; len];
    for (ja, &a) in cur.iter().enumerate() {
        if a == f64::NEG_INFINITY {
            continue;
        }
        for (jb, &b) in h.iter().enumerate().take(len - ja) {
            let cand = a + b;
            if cand > next[ja + jb] || (cand == next[ja + jb] && jb < take[ja + jb]) {
                next[ja + jb] = cand;
                take[ja + jb] = jb;
            }
        }
    }
    (next, take)
}

/// ℓ1 projection onto `model`.
pub fn project(x: &[f64], model: &ModelSpec) -> Result<ProjectionResult> {
    match model {
        ModelSpec::Plain(p) => {
            check_len(x, p.n)?;
            Ok(hard_threshold(x, p.budget))
        }
        ModelSpec::Tree(t) => project_tree(x, t),
        ModelSpec::Group(g) => project_group(x, g),
    }
}

/// Exhaustive projection over every enumerated model set (the empty set
/// included). Ties go to the lexicographically smallest support.
pub fn brute_force_project(x: &[f64], model: &ModelSpec, cap: usize) -> Result<ProjectionResult> {
    check_len(x, model.n())?;
    let opts = EnumerateOptions {
        cap,
        include_empty: true,
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    models::for_each_support(model, &opts, |s| {
        let wgt = covered_weight(x, s);
        let better = match &best {
            None => true,
            Some((bw, bs)) => wgt > *bw || (wgt == *bw && s < bs.as_slice()),
        };
        if better {
            best = Some((wgt, s.to_vec()));
        }
    })?;
    let (_, support) = best.unwrap_or_default();
    Ok(ProjectionResult::from_support(x, support))
}

/// Best model-sparse ℓ1 approximation error `||x||_1 - max_S ||x_S||_1`.
pub fn model_sigma(x: &[f64], model: &ModelSpec) -> Result<f64> {
    let p = project(x, model)?;
    let total: f64 = x.iter().map(|v| v.abs()).sum();
    Ok((total - p.covered_weight).max(0.0))
}

fn check_len(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    Ok(())
}
