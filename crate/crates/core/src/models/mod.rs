//! Structured sparsity models: plain `k`-sparse, rooted connected subtrees of a
//! `D`-ary tree, and unions of groups from a loopless overlapping structure.

mod group;
mod tree;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::projection;

pub use group::GroupModel;
pub use tree::TreeModel;

/// Default bound on the number of sets visited by exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// All sets of at most `budget` coordinates out of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlainModel {
    pub n: usize,
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSpec {
    Plain(PlainModel),
    Tree(TreeModel),
    Group(GroupModel),
}

impl ModelSpec {
    pub fn plain(n: usize, budget: usize) -> Self {
        ModelSpec::Plain(PlainModel { n, budget })
    }

    pub fn n(&self) -> usize {
        match self {
            ModelSpec::Plain(p) => p.n,
            ModelSpec::Tree(t) => t.n(),
            ModelSpec::Group(g) => g.n(),
        }
    }

    pub fn budget(&self) -> usize {
        match self {
            ModelSpec::Plain(p) => p.budget,
            ModelSpec::Tree(t) => t.budget(),
            ModelSpec::Group(g) => g.budget(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Plain(_) => "plain",
            ModelSpec::Tree(_) => "tree",
            ModelSpec::Group(_) => "group",
        }
    }

    /// Same structure with a different order. Tree budgets are clamped to `n`.
    pub fn with_budget(&self, budget: usize) -> ModelSpec {
        match self {
            ModelSpec::Plain(p) => ModelSpec::plain(p.n, budget),
            ModelSpec::Tree(t) => ModelSpec::Tree(t.with_budget(budget)),
            ModelSpec::Group(g) => ModelSpec::Group(g.with_budget(budget)),
        }
    }

    /// Largest number of nonzeros a model-sparse vector can have.
    pub fn max_support_size(&self) -> usize {
        match self {
            ModelSpec::Plain(p) => p.budget.min(p.n),
            ModelSpec::Tree(t) => t.budget(),
            ModelSpec::Group(g) => {
                let mut sizes: Vec<usize> = g.groups().iter().map(Vec::len).collect();
                sizes.sort_unstable_by(|a, b| b.cmp(a));
                sizes.iter().take(g.budget()).sum::<usize>().min(g.n())
            }
        }
    }

    /// Whether `s` is contained in some model set of order at most the budget.
    pub fn is_member(&self, s: &[usize]) -> Result<bool> {
        let n = self.n();
        if let Some(&bad) = s.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                bound: n,
            });
        }
        let mut set = s.to_vec();
        set.sort_unstable();
        set.dedup();
        if set.is_empty() {
            return Ok(true);
        }
        Ok(match self {
            ModelSpec::Plain(p) => set.len() <= p.budget,
            ModelSpec::Tree(t) => t.ancestor_closure(&set)?.len() <= t.budget(),
            ModelSpec::Group(g) => {
                // Maximum coverage of S with indicator weights equals |S| iff
                // S can be covered by at most `budget` groups.
                let mut w = vec![0.0; n];
                for &i in &set {
                    w[i] = 1.0;
                }
                let (_, covered) = projection::group_max_cover(g, &w);
                covered >= set.len() as f64
            }
        })
    }
}

/// Whether `s1 ∪ s2` is a member of `model` at order `k1 + k2`, given that
/// each input is a member at its own order.
pub fn nested_union(
    s1: &[usize],
    k1: usize,
    s2: &[usize],
    k2: usize,
    model: &ModelSpec,
) -> Result<bool> {
    let mut union = s1.to_vec();
    union.extend_from_slice(s2);
    model.with_budget(k1 + k2).is_member(&union)
}

#[derive(Debug, Clone, Copy)]
pub struct EnumerateOptions {
    pub cap: usize,
    pub include_empty: bool,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            cap: DEFAULT_ENUMERATION_CAP,
            include_empty: false,
        }
    }
}

/// Collects every model set (see [`for_each_support`]).
pub fn enumerate_supports(model: &ModelSpec, opts: &EnumerateOptions) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for_each_support(model, opts, |s| out.push(s.to_vec()))?;
    Ok(out)
}

/// Visits every model set of order at most the budget exactly once, as a
/// sorted index slice: all subsets of size `<= k` for plain models, all rooted
/// connected subtrees with `<= k` nodes for trees, and all distinct unions of
/// `<= k` groups for group models. Returns the number of sets visited.
pub fn for_each_support<F: FnMut(&[usize])>(
    model: &ModelSpec,
    opts: &EnumerateOptions,
    mut visit: F,
) -> Result<usize> {
    let mut count = 0usize;
    let mut emit = |s: &[usize], visit: &mut F| -> Result<()> {
        count += 1;
        if count > opts.cap {
            return Err(Error::EnumerationCap { cap: opts.cap });
        }
        visit(s);
        Ok(())
    };
    if opts.include_empty {
        emit(&[], &mut visit)?;
    }
    match model {
        ModelSpec::Plain(p) => {
            let k = p.budget.min(p.n);
            for size in 1..=k {
                let mut comb: Vec<usize> = (0..size).collect();
                loop {
                    emit(&comb, &mut visit)?;
                    if !next_combination(&mut comb, p.n) {
                        break;
                    }
                }
            }
        }
        ModelSpec::Tree(t) => {
            if t.budget() > 0 {
                let mut current = vec![t.root()];
                let candidates = t.children(t.root()).to_vec();
                let mut sorted = Vec::new();
                let mut res = Ok(());
                grow_subtrees(t, &mut current, &candidates, &mut |s| {
                    if res.is_ok() {
                        sorted.clear();
                        sorted.extend_from_slice(s);
                        sorted.sort_unstable();
                        res = emit(&sorted, &mut visit);
                    }
                    res.is_ok()
                });
                res?;
            }
        }
        ModelSpec::Group(g) => {
            let m = g.n_groups();
            let k = g.budget().min(m);
            let mut seen: HashSet<Vec<usize>> = HashSet::new();
            let mut combos = 0usize;
            let mut mark = vec![false; g.n()];
            for size in 1..=k {
                let mut comb: Vec<usize> = (0..size).collect();
                loop {
                    combos += 1;
                    if combos > opts.cap {
                        return Err(Error::EnumerationCap { cap: opts.cap });
                    }
                    let mut union = Vec::new();
                    for &gi in &comb {
                        for &i in &g.groups()[gi] {
                            if !mark[i] {
                                mark[i] = true;
                                union.push(i);
                            }
                        }
                    }
                    for &i in &union {
                        mark[i] = false;
                    }
                    union.sort_unstable();
                    if seen.insert(union.clone()) {
                        emit(&union, &mut visit)?;
                    }
                    if !next_combination(&mut comb, m) {
                        break;
                    }
                }
            }
        }
    }
    Ok(count)
}

/// Extends `current` by one candidate at a time; each connected set containing
/// the root is produced once because later candidates never revisit earlier
/// ones. `visit` returns false to abort.
fn grow_subtrees(
    t: &TreeModel,
    current: &mut Vec<usize>,
    candidates: &[usize],
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if !visit(current) {
        return false;
    }
    if current.len() == t.budget() {
        return true;
    }
    for (idx, &c) in candidates.iter().enumerate() {
        let mut next: Vec<usize> = candidates[idx + 1..].to_vec();
        next.extend_from_slice(t.children(c));
        current.push(c);
        let keep_going = grow_subtrees(t, current, &next, visit);
        current.pop();
        if !keep_going {
            return false;
        }
    }
    true
}

/// Advances `comb` to the next `comb.len()`-combination of `0..n` in
/// lexicographic order.
pub(crate) fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Draws a model set of full order: `k` coordinates for plain models, a
/// `k`-node rooted subtree grown from the root by repeatedly adding a
/// uniformly chosen frontier node, or the union of `k` distinct groups.
pub fn sample_support<R: Rng + ?Sized>(model: &ModelSpec, rng: &mut R) -> Vec<usize> {
    let mut support = match model {
        ModelSpec::Plain(p) => index::sample(rng, p.n, p.budget.min(p.n)).into_vec(),
        ModelSpec::Tree(t) => {
            let k = t.budget();
            let mut chosen = Vec::with_capacity(k);
            if k > 0 {
                chosen.push(t.root());
                let mut frontier: Vec<usize> = t.children(t.root()).to_vec();
                while chosen.len() < k && !frontier.is_empty() {
                    let pick = frontier.swap_remove(rng.random_range(0..frontier.len()));
                    chosen.push(pick);
                    frontier.extend_from_slice(t.children(pick));
                }
            }
            chosen
        }
        ModelSpec::Group(g) => {
            let k = g.budget().min(g.n_groups());
            let mut union: Vec<usize> = index::sample(rng, g.n_groups(), k)
                .into_iter()
                .flat_map(|gi| g.groups()[gi].iter().copied())
                .collect();
            union.sort_unstable();
            union.dedup();
            union
        }
    };
    support.sort_unstable();
    support
}

/// A model-sparse signal at full order with i.i.d. standard Gaussian values
/// on its support. Deterministic in `seed`.
pub fn sample_model_signal(model: &ModelSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_model_signal_with(model, &mut rng)
}

pub fn sample_model_signal_with<R: Rng + ?Sized>(model: &ModelSpec, rng: &mut R) -> Vec<f64> {
    let support = sample_support(model, rng);
    let mut x = vec![0.0; model.n()];
    for i in support {
        x[i] = rng.sample(StandardNormal);
    }
    x
}

/// Text format:
///
/// ```text
/// plain N k
/// tree N D k        followed by N parent entries, -1 for the root
/// group N M k       followed by M lines `j: i1 i2 ...`
/// ```
impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Plain(p) => writeln!(f, "plain {} {}", p.n, p.budget),
            ModelSpec::Tree(t) => {
                writeln!(f, "tree {} {} {}", t.n(), t.arity(), t.budget())?;
                for p in t.parents() {
                    match p {
                        Some(p) => writeln!(f, "{p}")?,
                        None => writeln!(f, "-1")?,
                    }
                }
                Ok(())
            }
            ModelSpec::Group(g) => {
                writeln!(f, "group {} {} {}", g.n(), g.n_groups(), g.budget())?;
                for (j, group) in g.groups().iter().enumerate() {
                    write!(f, "{j}:")?;
                    for i in group {
                        write!(f, " {i}")?;
                    }
                    writeln!(f)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty model file"))?;
        let mut tokens = header.split_whitespace();
        let kind = tokens.next().unwrap_or_default();
        let nums: Vec<usize> = tokens
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::parse(hline, format!("bad header field `{t}`")))
            })
            .collect::<Result<_>>()?;
        match (kind, nums.as_slice()) {
            ("plain", &[n, k]) => {
                if let Some((l, _)) = lines.next() {
                    return Err(Error::parse(l, "unexpected content after plain header"));
                }
                if n == 0 {
                    return Err(Error::parse(hline, "n must be positive"));
                }
                Ok(ModelSpec::plain(n, k))
            }
            ("tree", &[n, arity, k]) => {
                let mut parent = Vec::with_capacity(n);
                for (l, line) in lines {
                    for tok in line.split_whitespace() {
                        let v: i64 = tok
                            .parse()
                            .map_err(|_| Error::parse(l, format!("bad parent `{tok}`")))?;
                        parent.push(match v {
                            -1 => None,
                            v if v >= 0 => Some(v as usize),
                            _ => return Err(Error::parse(l, format!("bad parent `{tok}`"))),
                        });
                    }
                }
                if parent.len() != n {
                    return Err(Error::parse(
                        hline,
                        format!("expected {n} parent entries, found {}", parent.len()),
                    ));
                }
                Ok(ModelSpec::Tree(TreeModel::new(parent, arity, k)?))
            }
            ("group", &[n, m, k]) => {
                let mut groups = Vec::with_capacity(m);
                for (l, line) in lines {
                    let body = match line.split_once(':') {
                        Some((_, body)) => body,
                        None => {
                            return Err(Error::parse(l, "group line must look like `j: i1 i2 ...`"))
                        }
                    };
                    let group = body
                        .split_whitespace()
                        .map(|t| {
                            t.parse::<usize>()
                                .map_err(|_| Error::parse(l, format!("bad index `{t}`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    groups.push(group);
                }
                if groups.len() != m {
                    return Err(Error::parse(
                        hline,
                        format!("expected {m} groups, found {}", groups.len()),
                    ));
                }
                Ok(ModelSpec::Group(GroupModel::new(n, groups, k)?))
            }
            _ => Err(Error::parse(
                hline,
                "header must be `plain N k`, `tree N D k` or `group N M k`",
            )),
        }
    }
}
