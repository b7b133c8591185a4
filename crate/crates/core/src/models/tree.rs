use std::collections::VecDeque;

use crate::error::{Error, Result};

/// A `D`-ary tree over the coordinates `0..n` with a subtree-size budget `k`.
///
/// Model sets are rooted connected subtrees: sets of at most `k` nodes that
/// contain, with every node, all of its ancestors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeModel {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
    arity: usize,
    budget: usize,
    /// Breadth-first order from the root; parents precede children.
    order: Vec<usize>,
}

impl TreeModel {
    /// Validates a parent array (`None` marks the root).
    pub fn new(parent: Vec<Option<usize>>, arity: usize, budget: usize) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::InvalidModel("tree needs at least one node".into()));
        }
        if arity < 2 {
            return Err(Error::InvalidModel(format!("arity {arity} < 2")));
        }
        if budget > n {
            return Err(Error::InvalidModel(format!(
                "budget {budget} exceeds {n} nodes"
            )));
        }
        let mut root = None;
        let mut children = vec![Vec::new(); n];
        for (i, p) in parent.iter().enumerate() {
            match *p {
                None => {
                    if root.replace(i).is_some() {
                        return Err(Error::InvalidModel("more than one root".into()));
                    }
                }
                Some(p) if p >= n => {
                    return Err(Error::InvalidModel(format!(
                        "parent {p} of node {i} out of range"
                    )));
                }
                Some(p) => children[p].push(i),
            }
        }
        let root = root.ok_or_else(|| Error::InvalidModel("no root".into()))?;
        if let Some(v) = children.iter().position(|c| c.len() > arity) {
            return Err(Error::InvalidModel(format!(
                "node {v} has {} children, arity is {arity}",
                children[v].len()
            )));
        }
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            queue.extend(children[v].iter().copied());
        }
        if order.len() != n {
            return Err(Error::InvalidModel("parent links contain a cycle".into()));
        }
        Ok(TreeModel {
            parent,
            children,
            root,
            arity,
            budget,
            order,
        })
    }

    /// Complete `arity`-ary tree in heap order: node `i > 0` has parent `(i - 1) / arity`.
    pub fn complete(n: usize, arity: usize, budget: usize) -> Result<Self> {
        if arity < 2 {
            return Err(Error::InvalidModel(format!("arity {arity} < 2")));
        }
        let parent = (0..n)
            .map(|i| if i == 0 { None } else { Some((i - 1) / arity) })
            .collect();
        TreeModel::new(parent, arity, budget)
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn bfs_order(&self) -> &[usize] {
        &self.order
    }

    /// Same tree, new budget (clamped to the number of nodes).
    pub fn with_budget(&self, budget: usize) -> TreeModel {
        TreeModel {
            budget: budget.min(self.n()),
            ..self.clone()
        }
    }

    /// `S` together with all ancestors of its elements, sorted.
    pub fn ancestor_closure(&self, s: &[usize]) -> Result<Vec<usize>> {
        let n = self.n();
        let mut mark = vec![false; n];
        let mut out = Vec::new();
        for &i in s {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, bound: n });
            }
            let mut v = Some(i);
            while let Some(u) = v {
                if mark[u] {
                    break;
                }
                mark[u] = true;
                out.push(u);
                v = self.parent[u];
            }
        }
        out.sort_unstable();
        Ok(out)
    }
}
