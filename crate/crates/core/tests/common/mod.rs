#![allow(dead_code)]

use expander_sketch::models::{GroupModel, TreeModel};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random rooted tree on `n` nodes with at most `arity` children per node and
/// shuffled labels.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, arity: usize, budget: usize) -> TreeModel {
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(rng);
    let mut parent = vec![None; n];
    let mut kids = vec![0usize; n];
    for t in 1..n {
        let open: Vec<usize> = (0..t).filter(|&s| kids[s] < arity).collect();
        let s = open[rng.random_range(0..open.len())];
        kids[s] += 1;
        parent[labels[t]] = Some(labels[s]);
    }
    TreeModel::new(parent, arity, budget.min(n)).unwrap()
}

/// Random loopless group structure with at most `max_groups` groups over at
/// most `max_n` coordinates. Overlaps follow a random forest on the groups.
pub fn random_groups<R: Rng>(
    rng: &mut R,
    max_groups: usize,
    max_n: usize,
    budget: usize,
) -> GroupModel {
    loop {
        let m = rng.random_range(1..=max_groups);
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); m];
        let mut next = 0;
        for g in 0..m {
            for _ in 0..rng.random_range(0..=2) {
                groups[g].push(next);
                next += 1;
            }
            if g > 0 && rng.random_bool(0.7) {
                let p = rng.random_range(0..g);
                for _ in 0..rng.random_range(1..=2) {
                    groups[g].push(next);
                    groups[p].push(next);
                    next += 1;
                }
            }
            if groups[g].is_empty() {
                groups[g].push(next);
                next += 1;
            }
        }
        if next > max_n {
            continue;
        }
        let mut labels: Vec<usize> = (0..next).collect();
        labels.shuffle(rng);
        let groups = groups
            .into_iter()
            .map(|grp| grp.into_iter().map(|i| labels[i]).collect())
            .collect();
        return GroupModel::new(next, groups, budget).unwrap();
    }
}

/// Values in multiples of 1/8 within [-2, 2]: exact sums, frequent ties.
pub fn dyadic_signal<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(-16i32..=16) as f64 / 8.0)
        .collect()
}

pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn l1_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
