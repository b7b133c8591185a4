use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Overlapping groups over `0..n` whose overlap graph is a forest, with a
/// budget `k` on the number of selected groups.
///
/// Because the overlap graph has no cycle, every coordinate lies in at most
/// two groups and those two groups are adjacent in the forest. The forest is
/// rooted at the smallest group index of each component; coordinates shared by
/// a group and its forest parent are attributed to the child side of the edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupModel {
    n: usize,
    groups: Vec<Vec<usize>>,
    budget: usize,
    g_max: usize,
    forest: GroupForest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct GroupForest {
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub roots: Vec<usize>,
    /// Parents precede children.
    pub order: Vec<usize>,
    /// Coordinates that belong to this group only.
    pub own: Vec<Vec<usize>>,
    /// Coordinates shared with the forest parent.
    pub shared: Vec<Vec<usize>>,
}

impl GroupModel {
    pub fn new(n: usize, groups: Vec<Vec<usize>>, budget: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("group model needs n > 0".into()));
        }
        if groups.is_empty() {
            return Err(Error::InvalidModel(
                "group model needs at least one group".into(),
            ));
        }
        let mut groups = groups;
        let mut membership: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (g, group) in groups.iter_mut().enumerate() {
            group.sort_unstable();
            group.dedup();
            if group.is_empty() {
                return Err(Error::InvalidModel(format!("group {g} is empty")));
            }
            for &i in group.iter() {
                if i >= n {
                    return Err(Error::InvalidModel(format!(
                        "group {g} contains index {i} >= n = {n}"
                    )));
                }
                membership[i].push(g);
            }
        }
        if let Some(i) = membership.iter().position(|m| m.is_empty()) {
            return Err(Error::InvalidModel(format!(
                "coordinate {i} is not covered by any group"
            )));
        }

        let m = groups.len();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for mem in &membership {
            for (a, &ga) in mem.iter().enumerate() {
                for &gb in &mem[a + 1..] {
                    edges.push((ga, gb));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut uf: Vec<usize> = (0..m).collect();
        let mut adj = vec![Vec::new(); m];
        for &(a, b) in &edges {
            let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
            if ra == rb {
                return Err(Error::InvalidModel(format!(
                    "group graph has a loop through groups {a} and {b}"
                )));
            }
            uf[ra] = rb;
            adj[a].push(b);
            adj[b].push(a);
        }

        let mut parent = vec![None; m];
        let mut children = vec![Vec::new(); m];
        let mut roots = Vec::new();
        let mut order = Vec::with_capacity(m);
        let mut seen = vec![false; m];
        for start in 0..m {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            roots.push(start);
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        parent[w] = Some(v);
                        children[v].push(w);
                        queue.push_back(w);
                    }
                }
            }
        }

        let mut own = vec![Vec::new(); m];
        let mut shared = vec![Vec::new(); m];
        for (i, mem) in membership.iter().enumerate() {
            match mem.as_slice() {
                [g] => own[*g].push(i),
                [a, b] => {
                    let child = if parent[*b] == Some(*a) { *b } else { *a };
                    shared[child].push(i);
                }
                _ => unreachable!("three groups sharing a coordinate form a loop"),
            }
        }

        let g_max = groups.iter().map(Vec::len).max().unwrap_or(0);
        Ok(GroupModel {
            n,
            groups,
            budget,
            g_max,
            forest: GroupForest {
                parent,
                children,
                roots,
                order,
                own,
                shared,
            },
        })
    }

    /// `n_blocks` contiguous equal blocks of size `n / n_blocks`; the last
    /// block absorbs any remainder so the blocks partition `0..n`.
    pub fn blocks(n: usize, n_blocks: usize, budget: usize) -> Result<Self> {
        if n_blocks == 0 || n_blocks > n {
            return Err(Error::InvalidModel(format!(
                "cannot split {n} coordinates into {n_blocks} blocks"
            )));
        }
        let g = n / n_blocks;
        let groups = (0..n_blocks)
            .map(|b| {
                let end = if b + 1 == n_blocks { n } else { (b + 1) * g };
                (b * g..end).collect()
            })
            .collect();
        GroupModel::new(n, groups, budget)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn g_max(&self) -> usize {
        self.g_max
    }

    pub fn with_budget(&self, budget: usize) -> GroupModel {
        GroupModel {
            budget,
            ..self.clone()
        }
    }

    pub(crate) fn forest(&self) -> &GroupForest {
        &self.forest
    }
}

fn find(uf: &mut [usize], mut a: usize) -> usize {
    while uf[a] != a {
        uf[a] = uf[uf[a]];
        a = uf[a];
    }
    a
}
