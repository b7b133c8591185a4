//! Acceptance gate. Runs without the libtest harness so that every criterion
//! prints its own PASS/FAIL line; exits non-zero if any criterion fails.

mod common;

use std::fmt::Write as _;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use expander_sketch::expander::{
    raney_tree_count, unique_neighbor_check, verify_model_expansion, EdgePolicy, ExpansionReport,
    VerifyOptions,
};
use expander_sketch::harness::{
    self, raw_csv, summary_csv, tree_instance, ExperimentConfig, ExperimentOutcome, Family,
};
use expander_sketch::models::{
    for_each_support, sample_support, EnumerateOptions, GroupModel, ModelSpec, TreeModel,
};
use expander_sketch::projection::{brute_force_project, model_sigma, project};
use expander_sketch::recovery::{
    convergence_constants, median_lemma_check, recover, recover_observed, Algorithm,
    RecoveryConfig, SketchProblem, StopReason,
};
use expander_sketch::SparseBinaryMatrix;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use common::{dyadic_signal, l1, l1_dist, random_groups, random_tree};

const SEED: u64 = 20_240_917;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn report(id: usize, name: &str, v: &Verdict, elapsed: Duration) -> bool {
    println!(
        "criterion {id} [{}] {name}: {} ({:.1}s)",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        elapsed.as_secs_f64()
    );
    v.pass
}

// ---------- 1: projection exactness ----------

fn projection_exactness(seed: u64) -> (Verdict, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("family,instance,n,k,covered_weight\n");
    let mut mismatches = 0;
    let mut invalid = 0;
    let per_family = 1000;
    for inst in 0..per_family {
        let n = rng.random_range(1..=15);
        let arity = rng.random_range(2..=3);
        let k = rng.random_range(1..=4);
        let model = ModelSpec::Tree(random_tree(&mut rng, n, arity, k));
        let x = dyadic_signal(&mut rng, n);
        let (fast, slow) = (
            project(&x, &model).unwrap(),
            brute_force_project(&x, &model, 1 << 20).unwrap(),
        );
        mismatches += usize::from(fast.covered_weight != slow.covered_weight);
        invalid += usize::from(!model.is_member(&fast.support).unwrap());
        let _ = writeln!(csv, "tree,{inst},{n},{k},{:?}", fast.covered_weight);
    }
    for inst in 0..per_family {
        let k = rng.random_range(1..=4);
        let g = random_groups(&mut rng, 8, 20, k);
        let n = g.n();
        let model = ModelSpec::Group(g);
        let x = dyadic_signal(&mut rng, n);
        let (fast, slow) = (
            project(&x, &model).unwrap(),
            brute_force_project(&x, &model, 1 << 20).unwrap(),
        );
        mismatches += usize::from(fast.covered_weight != slow.covered_weight);
        invalid += usize::from(!model.is_member(&fast.support).unwrap());
        let _ = writeln!(csv, "group,{inst},{n},{k},{:?}", fast.covered_weight);
    }
    let v = verdict(
        mismatches == 0 && invalid == 0,
        format!("{per_family} trees + {per_family} group structures, {mismatches} weight mismatches, {invalid} non-model supports"),
    );
    (v, csv)
}

// ---------- 2: Raney counts ----------

fn raney_cross_check() -> Verdict {
    let mut failures = Vec::new();
    let mut checked = 0;
    for arity in [2usize, 3] {
        for k in 1..=6usize {
            // Depth k makes every k-node rooted subtree fit.
            let n = (arity.pow(k as u32 + 1) - 1) / (arity - 1);
            let tree = TreeModel::complete(n, arity, k).unwrap();
            let mut count = 0u64;
            for_each_support(&ModelSpec::Tree(tree), &EnumerateOptions::default(), |s| {
                if s.len() == k {
                    count += 1;
                }
            })
            .unwrap();
            checked += 1;
            if BigUint::from(count) != raney_tree_count(arity, k).unwrap() {
                failures.push(format!("D={arity} k={k}: enumerated {count}"));
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!("{checked} (D, k) pairs, mismatches: {failures:?}"),
    )
}

// ---------- 3 & 4: verified small matrices ----------

struct Verified {
    a: SparseBinaryMatrix,
    models: Vec<(ModelSpec, ExpansionReport)>,
}

fn verified_matrices(seed: u64, wanted: usize) -> (Vec<Verified>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < wanted && attempts < 100 * wanted {
        attempts += 1;
        let group_budget = rng.random_range(1..=2);
        let group = random_groups(&mut rng, 6, 12, group_budget);
        let n = group.n();
        if n < 2 {
            continue;
        }
        let arity = rng.random_range(2..=3);
        let tree_budget = rng.random_range(2..=3usize).min(n);
        let tree = random_tree(&mut rng, n, arity, tree_budget);
        let d = rng.random_range(2..=5);
        let m = rng.random_range(20..=40);
        let a = SparseBinaryMatrix::random(n, m, d, rng.random()).unwrap();
        let mut models = Vec::new();
        for model in [ModelSpec::Tree(tree), ModelSpec::Group(group.clone())] {
            let r = verify_model_expansion(&a, &model, &VerifyOptions::default()).unwrap();
            models.push((model, r));
        }
        if models
            .iter()
            .all(|(_, r)| r.exhaustive && 4.0 * r.epsilon < 1.0)
        {
            out.push(Verified { a, models });
        }
    }
    (out, attempts)
}

fn random_subset<R: Rng>(rng: &mut R, set: &[usize]) -> Vec<usize> {
    loop {
        let s: Vec<usize> = set
            .iter()
            .copied()
            .filter(|_| rng.random_bool(0.5))
            .collect();
        if !s.is_empty() {
            return s;
        }
    }
}

fn gaussian<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn median_lemma(mats: &[Verified], seed: u64) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut triples, mut violations, mut worst) = (0, 0, 0.0f64);
    for v in mats {
        for (model, rep) in &v.models {
            for t in 0..25 {
                let full = sample_support(model, &mut rng);
                let s = random_subset(&mut rng, &full);
                let x = gaussian(&mut rng, model.n());
                let e: Vec<f64> = match t % 3 {
                    0 => vec![0.0; v.a.n_right()],
                    1 => gaussian(&mut rng, v.a.n_right()),
                    _ => gaussian(&mut rng, v.a.n_right())
                        .into_iter()
                        .map(|z| 10.0 * z)
                        .collect(),
                };
                let b = median_lemma_check(&v.a, model, rep, &s, &x, &e).unwrap();
                triples += 1;
                violations += usize::from(!b.holds);
                if b.rhs > 0.0 {
                    worst = worst.max(b.lhs / b.rhs);
                }
            }
        }
    }
    verdict(
        mats.len() >= 200 && violations == 0,
        format!(
            "{} matrices, {triples} (S, x, e) triples over tree and group supports, {violations} violations, max lhs/rhs {worst:.3}",
            mats.len()
        ),
    )
}

fn unique_neighbor_and_rip(mats: &[Verified], seed: u64) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sets, mut un_violations) = (0usize, 0usize);
    let (mut probes, mut rip_violations) = (0usize, 0usize);
    for v in mats {
        let d = v.a.degree() as f64;
        for (model, rep) in &v.models {
            let eps = rep.epsilon;
            for_each_support(model, &EnumerateOptions::default(), |k_set| {
                for mask in 1u64..(1u64 << k_set.len()) {
                    let s: Vec<usize> = k_set
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, &i)| i)
                        .collect();
                    sets += 1;
                    un_violations += usize::from(!unique_neighbor_check(&v.a, &s, eps).unwrap());
                }
            })
            .unwrap();
            for p in 0..30 {
                let full = sample_support(model, &mut rng);
                let s = random_subset(&mut rng, &full);
                let mut x = vec![0.0; model.n()];
                for &i in &s {
                    x[i] = if p % 2 == 0 {
                        if rng.random_bool(0.5) {
                            1.0
                        } else {
                            -1.0
                        }
                    } else {
                        rng.sample(StandardNormal)
                    };
                }
                let ax = l1(&v.a.apply(&x).unwrap());
                let xn = l1(&x);
                let slack = 1e-12 * d * xn;
                probes += 1;
                if ax < (1.0 - 2.0 * eps) * d * xn - slack || ax > d * xn + slack {
                    rip_violations += 1;
                }
            }
        }
    }
    verdict(
        un_violations == 0 && rip_violations == 0 && probes >= 10_000,
        format!(
            "{sets} model-sparse sets: {un_violations} unique-neighbor violations; {probes} RIP-1 probes: {rip_violations} violations"
        ),
    )
}

// ---------- 5: exact recovery at generous m ----------

fn generous_recovery(seed: u64) -> (Verdict, String) {
    let n = 256;
    let mut config = ExperimentConfig::new(Family::Tree);
    config.n_values = vec![n];
    config.trials = 20;
    config.seed = seed;
    let params = harness::instance_params(Family::Tree, n).unwrap();
    let k = params.k;
    let m = 10 * k * (n as f64).log2() as usize;
    let records = harness::run_cell(&config, n, m, Algorithm::Meiht).unwrap();
    let med = harness::median(&records.iter().map(|r| r.relative_error).collect::<Vec<_>>());

    // Replay every trial with an observer on the iterates.
    let mut off_model = 0;
    let mut iterates = 0;
    for t in 0..config.trials {
        let inst = tree_instance(n, harness::signal_seed(seed, Family::Tree, n, t)).unwrap();
        let a = SparseBinaryMatrix::random(
            n,
            m,
            params.d,
            harness::matrix_seed(seed, Family::Tree, n, m, t),
        )
        .unwrap();
        let y: Vec<f64> = a
            .apply(&inst.signal)
            .unwrap()
            .iter()
            .map(|v| v / params.d as f64)
            .collect();
        let problem = SketchProblem::from_normalized(&a, y, &inst.model).unwrap();
        recover_observed(
            Algorithm::Meiht,
            &problem,
            &RecoveryConfig::default(),
            |_, x| {
                let supp: Vec<usize> = (0..n).filter(|&i| x[i] != 0.0).collect();
                iterates += 1;
                if !inst.model.is_member(&supp).unwrap() {
                    off_model += 1;
                }
            },
        )
        .unwrap();
    }
    let v = verdict(
        med < 1e-5 && off_model == 0,
        format!(
            "N={n} k={k} d={} m={m}: median relative error {med:.3e}, {off_model} of {iterates} iterates outside the model",
            params.d
        ),
    );
    (v, raw_csv(&records))
}

// ---------- 6 & 7: m* trends ----------

fn sweep(family: Family, n_values: Vec<usize>, seed: u64) -> ExperimentOutcome {
    let mut config = ExperimentConfig::new(family);
    config.n_values = n_values;
    config.trials = 20;
    config.seed = seed;
    config.full_curve = false;
    harness::run_experiment(&config).unwrap()
}

fn m_star(out: &ExperimentOutcome, n: usize, alg: Algorithm) -> Option<usize> {
    out.summary
        .iter()
        .find(|r| r.n == n && r.algorithm == alg)
        .and_then(|r| r.m_star)
}

fn describe(out: &ExperimentOutcome, ns: &[usize]) -> String {
    ns.iter()
        .map(|&n| {
            let f = |a| {
                m_star(out, n, a)
                    .map(|m| m.to_string())
                    .unwrap_or("-".into())
            };
            format!(
                "N={n}: eiht {} meiht {}",
                f(Algorithm::Eiht),
                f(Algorithm::Meiht)
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn trend_check(block: &ExperimentOutcome, tree: &ExperimentOutcome, ns: &[usize]) -> Verdict {
    let mut ordered = true;
    let mut gap_ok = Vec::new();
    for (name, out) in [("block", block), ("tree", tree)] {
        let mut gaps = Vec::new();
        for &n in ns {
            match (
                m_star(out, n, Algorithm::Eiht),
                m_star(out, n, Algorithm::Meiht),
            ) {
                (Some(e), Some(m)) => {
                    ordered &= m <= e;
                    gaps.push(e as i64 - m as i64);
                }
                _ => ordered = false,
            }
        }
        let monotone = gaps.len() == ns.len() && gaps.windows(2).all(|w| w[1] >= w[0]);
        gap_ok.push((name, monotone, gaps));
    }
    let any_gap = gap_ok.iter().any(|(_, ok, _)| *ok);
    verdict(
        ordered && any_gap,
        format!(
            "block [{}] tree [{}]; gaps {:?}",
            describe(block, ns),
            describe(tree, ns),
            gap_ok
        ),
    )
}

fn fixed_d_check(out: &ExperimentOutcome, ns: &[usize]) -> Verdict {
    let me: Vec<Option<usize>> = ns
        .iter()
        .map(|&n| m_star(out, n, Algorithm::Meiht))
        .collect();
    let all_found = me.iter().all(Option::is_some);
    let vals: Vec<usize> = me.iter().flatten().copied().collect();
    let flat = all_found && {
        let (lo, hi) = (*vals.iter().min().unwrap(), *vals.iter().max().unwrap());
        hi as f64 <= 1.5 * lo as f64
    };
    let first = m_star(out, ns[0], Algorithm::Eiht);
    let last = m_star(out, *ns.last().unwrap(), Algorithm::Eiht);
    let grows = match (first, last) {
        (Some(a), Some(b)) => b > a,
        // Not found at the largest N means it needs more than the whole grid.
        (Some(_), None) => true,
        _ => false,
    };
    verdict(flat && grows, describe(out, ns))
}

// ---------- 8: convergence constants ----------

fn constants_check(seed: u64) -> Verdict {
    let at_threshold = convergence_constants(1.0 / 12.0, 8).alpha;
    let grid_ok = (0..100).all(|i| {
        let eps = i as f64 / 100.0 / 12.0;
        convergence_constants(eps, 8).alpha < 1.0
    });

    // Tiny certified instances: a complete binary tree on 15 nodes with k = 2
    // and six blocks of two with k = 1, expansion certified at order 3k.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, m) = (12, 1500);
    let models = [
        ModelSpec::Tree(TreeModel::complete(15, 2, 2).unwrap()),
        ModelSpec::Group(GroupModel::blocks(12, 6, 1).unwrap()),
    ];
    let (mut certified, mut converged, mut violations, mut tries) = (0, 0, 0, 0);
    let mut worst = 0.0f64;
    for model_k in &models {
        let n = model_k.n();
        let model_3k = model_k.with_budget(3 * model_k.budget());
        let mut found = 0;
        while found < 10 && tries < 400 {
            tries += 1;
            let a =
                SparseBinaryMatrix::random_with_policy(n, m, d, rng.random(), EdgePolicy::Simple)
                    .unwrap();
            let rep = verify_model_expansion(&a, &model_3k, &VerifyOptions::default()).unwrap();
            if !(rep.exhaustive && rep.epsilon < 1.0 / 12.0) {
                continue;
            }
            found += 1;
            let c = convergence_constants(rep.epsilon, d);
            for t in 0..9 {
                let mut x = vec![0.0; n];
                for i in sample_support(model_k, &mut rng) {
                    x[i] = rng.sample(StandardNormal);
                }
                let tail = [0.0, 1e-3, 1e-1][t % 3];
                for xi in x.iter_mut() {
                    *xi += tail * rng.sample::<f64, _>(StandardNormal);
                }
                let noise = [0.0, 1e-4, 1e-2][t / 3];
                let mut y = a.apply(&x).unwrap();
                let mut e_norm = 0.0;
                for yj in y.iter_mut() {
                    let e = noise * rng.sample::<f64, _>(StandardNormal);
                    *yj += e;
                    e_norm += e.abs();
                }
                let problem = SketchProblem::new(&a, y, model_k).unwrap();
                let r = recover(Algorithm::Meiht, &problem, &RecoveryConfig::default()).unwrap();
                if r.stop_reason == StopReason::MaxIterations {
                    continue;
                }
                converged += 1;
                let bound = c.c1 * model_sigma(&x, model_k).unwrap() + c.c2 * e_norm;
                let err = l1_dist(&r.estimate, &x);
                if bound > 0.0 {
                    worst = worst.max(err / bound);
                }
                if err > bound + 1e-9 * (1.0 + l1(&x)) {
                    violations += 1;
                }
            }
        }
        certified += found;
    }
    verdict(
        at_threshold == 1.0 && grid_ok && certified == 20 && converged > 0 && violations == 0,
        format!(
            "alpha(1/12) = {at_threshold}, alpha < 1 on 100-point grid: {grid_ok}; {certified} certified instances ({tries} drawn), {converged} converged runs, {violations} bound violations, max err/bound {worst:.3}"
        ),
    )
}

fn main() -> ExitCode {
    let mut all = true;

    let t = Instant::now();
    let (v1, csv1) = projection_exactness(SEED);
    let v1 = Verdict {
        pass: v1.pass && t.elapsed() < Duration::from_secs(60),
        ..v1
    };
    all &= report(1, "projection exactness", &v1, t.elapsed());

    let t = Instant::now();
    all &= report(2, "Raney cross-check", &raney_cross_check(), t.elapsed());

    let t = Instant::now();
    let (mats, attempts) = verified_matrices(SEED + 3, 200);
    let mut v3 = median_lemma(&mats, SEED + 31);
    v3.detail = format!("{} ({attempts} matrices drawn)", v3.detail);
    all &= report(3, "median lemma", &v3, t.elapsed());

    let t = Instant::now();
    all &= report(
        4,
        "unique neighbors and RIP-1",
        &unique_neighbor_and_rip(&mats, SEED + 4),
        t.elapsed(),
    );

    let t = Instant::now();
    let (v5, csv5) = generous_recovery(SEED + 5);
    let v5 = Verdict {
        pass: v5.pass && t.elapsed() < Duration::from_secs(120),
        ..v5
    };
    all &= report(5, "exact recovery at generous m", &v5, t.elapsed());

    let t = Instant::now();
    let ns6: Vec<usize> = (7..=10).map(|p| 1 << p).collect();
    let block = sweep(Family::Block, ns6.clone(), SEED + 6);
    let tree = sweep(Family::Tree, ns6.clone(), SEED + 6);
    let mut v6 = trend_check(&block, &tree, &ns6);
    v6.pass &= t.elapsed() < Duration::from_secs(30 * 60);
    all &= report(6, "m* trends", &v6, t.elapsed());

    let t = Instant::now();
    let ns7: Vec<usize> = (7..=11).map(|p| 1 << p).collect();
    let fixed = sweep(Family::FixedD, ns7.clone(), SEED + 7);
    all &= report(
        7,
        "fixed-d flatness",
        &fixed_d_check(&fixed, &ns7),
        t.elapsed(),
    );

    let t = Instant::now();
    all &= report(
        8,
        "convergence constants",
        &constants_check(SEED + 8),
        t.elapsed(),
    );

    let t = Instant::now();
    let (_, csv1b) = projection_exactness(SEED);
    let (_, csv5b) = generous_recovery(SEED + 5);
    let block_b = sweep(Family::Block, ns6.clone(), SEED + 6);
    let tree_b = sweep(Family::Tree, ns6.clone(), SEED + 6);
    let same = |a: &ExperimentOutcome, b: &ExperimentOutcome| {
        raw_csv(&a.records) == raw_csv(&b.records)
            && summary_csv(&a.summary) == summary_csv(&b.summary)
    };
    let checks = [
        ("criterion 1 csv", csv1 == csv1b),
        ("criterion 5 csv", csv5 == csv5b),
        ("criterion 6 block csv", same(&block, &block_b)),
        ("criterion 6 tree csv", same(&tree, &tree_b)),
    ];
    let v9 = verdict(checks.iter().all(|c| c.1), format!("{checks:?}"));
    all &= report(9, "determinism", &v9, t.elapsed());

    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
