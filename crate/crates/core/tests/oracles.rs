//! Closed-form quantities checked against independent evaluations.

use expander_sketch::expander::{group_expander_params, raney_tree_count, tree_expander_params};
use expander_sketch::harness::{instance_params, m_grid, Family, MGrid};
use expander_sketch::models::{enumerate_supports, EnumerateOptions, ModelSpec, TreeModel};
use num_bigint::BigUint;

/// Coefficients of F(z) = z (1 + F(z))^D, i.e. rooted subtrees of the
/// infinite D-ary tree counted by size, by fixed-point iteration on power series.
fn subtree_series(arity: usize, max_k: usize) -> Vec<u128> {
    let mut f = vec![0u128; max_k + 1];
    for _ in 0..=max_k {
        let mut one_plus = f.clone();
        one_plus[0] += 1;
        let mut pow = vec![0u128; max_k + 1];
        pow[0] = 1;
        for _ in 0..arity {
            let mut next = vec![0u128; max_k + 1];
            for (i, &a) in pow.iter().enumerate() {
                for (j, &b) in one_plus.iter().enumerate() {
                    if i + j <= max_k {
                        next[i + j] += a * b;
                    }
                }
            }
            pow = next;
        }
        let mut g = vec![0u128; max_k + 1];
        g[1..].copy_from_slice(&pow[..max_k]);
        f = g;
    }
    f
}

#[test]
fn raney_matches_series_oracle() {
    for arity in 2..=4 {
        let series = subtree_series(arity, 14);
        for (k, &count) in series.iter().enumerate().skip(1) {
            assert_eq!(
                raney_tree_count(arity, k).unwrap(),
                BigUint::from(count),
                "D={arity} k={k}"
            );
        }
    }
}

#[test]
fn raney_matches_enumeration_on_ternary_trees() {
    for k in 1..=5 {
        let n = (3usize.pow(k as u32 + 1) - 1) / 2;
        let model = ModelSpec::Tree(TreeModel::complete(n, 3, k).unwrap());
        let exact = enumerate_supports(&model, &EnumerateOptions::default())
            .unwrap()
            .into_iter()
            .filter(|s| s.len() == k)
            .count();
        assert_eq!(BigUint::from(exact), raney_tree_count(3, k).unwrap());
    }
}

#[test]
fn tree_params_match_direct_evaluation() {
    for &(n, k, eps) in &[
        (8192usize, 26usize, 1.0f64),
        (1024, 20, 0.5),
        (4096, 10, 0.25),
        (100, 3, 0.1),
    ] {
        let r = (n as f64 / k as f64).ln();
        let d = ((r / (eps * r.ln())).floor() as usize).max(1);
        let m = ((d * k) as f64 / eps).floor() as usize;
        let p = tree_expander_params(n, k, eps, 1.0, 1.0).unwrap();
        assert_eq!((p.d, p.m), (d, m.max(d)), "n={n} k={k}");
    }
}

#[test]
fn group_params_match_direct_evaluation() {
    for &(n, k, g, eps) in &[
        (1024usize, 5usize, 10usize, 1.0f64),
        (8192, 5, 14, 0.5),
        (300, 2, 3, 0.2),
    ] {
        let d = ((n as f64).ln() / (eps * ((k * g) as f64).ln())).floor() as usize;
        let m = ((d * k * g) as f64 / eps).floor() as usize;
        let p = group_expander_params(n, k, g, eps, 1.0, 1.0).unwrap();
        assert_eq!((p.d, p.m), (d.max(1), m.max(d.max(1))), "n={n}");
    }
}

#[test]
fn experiment_parameters_for_every_size() {
    for p in 7..=13u32 {
        let n = 1usize << p;
        let blocks = n / p as usize;
        let g = n / blocks;
        let d = (2.0 * (n as f64).ln() / ((5 * g) as f64).ln()).floor() as usize;
        let b = instance_params(Family::Block, n).unwrap();
        assert_eq!((b.n_groups, b.g, b.d, b.k), (Some(blocks), Some(g), d, 5));

        let k = 2 * p as usize;
        let r = n as f64 / k as f64;
        let d = (2.5 * r.ln() / r.ln().ln()).floor() as usize;
        let t = instance_params(Family::Tree, n).unwrap();
        assert_eq!((t.k, t.d), (k, d));
    }
}

#[test]
fn published_experiment_values() {
    let t = instance_params(Family::Tree, 8192).unwrap();
    assert_eq!((t.k, t.d), (26, 8));
    let b = instance_params(Family::Block, 1024).unwrap();
    assert_eq!((b.n_groups, b.g, b.d), (Some(102), Some(10), 3));
    let b = instance_params(Family::Block, 128).unwrap();
    assert_eq!((b.n_groups, b.g), (Some(18), Some(7)));
    let f = instance_params(Family::FixedD, 2048).unwrap();
    assert_eq!((f.k, f.d), (16, 6));
}

#[test]
fn tree_grid_spans_two_k_to_ten_k_log_n() {
    for p in 7..=13u32 {
        let n = 1usize << p;
        let k = 2 * p as usize;
        let grid = m_grid(Family::Tree, n, &MGrid::default()).unwrap();
        assert_eq!(grid[0], 2 * k);
        assert!(grid.windows(2).all(|w| w[1] - w[0] == k));
        let end = 10 * k * p as usize;
        assert!(*grid.last().unwrap() <= end && *grid.last().unwrap() + k > end);
    }
}
