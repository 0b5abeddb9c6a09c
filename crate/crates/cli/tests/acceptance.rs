//! Acceptance gate. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero when any criterion fails. Pass criterion numbers as
//! arguments to run a subset, e.g. `cargo test --test acceptance -- 4 7`.

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use qonsensus::consensus::decode;
use qonsensus::metrics::{
    adjusted_rand_index, class_cv, pair_disagreement, partition_difference_objective, rand_index,
    silhouette,
};
use qonsensus::oracle::{
    brute_force_consensus, brute_force_qubo, enumerate_partitions, exhaustive_one_hot_minimum,
};
use qonsensus::qubo::{build_correlation, build_pairwise, eval_objective, eval_qubo};
use qonsensus::similarity::build_similarity;
use qonsensus::{
    anneal, AnnealParams, BuilderConfig, Dataset, Ensemble, Method, ModelKind, Partition,
};
use qonsensus_cli::{load_dataset, ExperimentConfig, KChoice, Runner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances and budgets.
const C1_ENSEMBLES: u64 = 20;
const C2_ENSEMBLES: u64 = 10;
const C3_MEMBER_COUNTS: [usize; 5] = [2, 4, 5, 10, 20];
const C3_ENSEMBLES_PER_M: u64 = 4;
const C4_INSTANCES: u64 = 50;
const C4_REQUIRED_HITS: usize = 45;
const C4_MEMBERS: usize = 10;
const IRIS_SEEDS: std::ops::Range<u64> = 0..5;
const IRIS_RUNS: usize = 2;
const IRIS_SWEEPS: usize = 500;
const C5_DACR_TARGET: f64 = 0.621;
const C5_HAC_TARGET: f64 = 0.618;
const C5_TOLERANCE: f64 = 0.02;
const C5_DACR_MAX_CLUSTERS: usize = 6;
const C6_MIN_DROP: f64 = 0.05;
const C6_DACR_BAND: f64 = 0.02;
const C7_WINE_CV: f64 = 0.158;
const C7_CV_TOLERANCE: f64 = 0.001;
const FLOAT_EPS: f64 = 1e-12;

type Outcome = Result<String, String>;
type Criterion = (u32, fn() -> Outcome, Duration);

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn random_partition(rng: &mut ChaCha8Rng, n: usize, k_max: usize) -> Partition {
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k_max)).collect();
    Partition::from_labels(&labels)
}

fn random_ensemble(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Ensemble {
    let members = (0..m)
        .map(|_| {
            let k = rng.random_range(1..=n);
            random_partition(rng, n, k)
        })
        .collect();
    Ensemble::new(members, 0).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// One-hot energy of every partition equals its combinatorial objective.
fn criterion_1() -> Outcome {
    let mut checked = 0u64;
    for seed in 0..C1_ENSEMBLES {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        for n in 2..=8 {
            let m = rng.random_range(1..=12);
            let sim =
                build_similarity(&random_ensemble(&mut rng, n, m)).map_err(|e| e.to_string())?;
            let models = [
                (
                    ModelKind::Pairwise,
                    build_pairwise(&sim, &BuilderConfig::pairwise(n)).unwrap(),
                ),
                (
                    ModelKind::Correlation,
                    build_correlation(&sim, &BuilderConfig::correlation(n)).unwrap(),
                ),
            ];
            for p in enumerate_partitions(n, None).unwrap() {
                for (kind, model) in &models {
                    let energy = eval_qubo(&model.encode(&p).unwrap(), model).unwrap();
                    let objective = eval_objective(&p, &sim, *kind).unwrap();
                    ensure(energy == objective, || {
                        format!("seed {seed}, n={n}, {kind:?}, {:?}: energy {energy} != objective {objective}", p.assignment())
                    })?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} partition/model pairs agree"))
}

/// With K = n and B = 100·n the exhaustive QUBO minimum is one-hot and optimal.
fn criterion_2() -> Outcome {
    let mut checked = 0;
    for seed in 0..C2_ENSEMBLES {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        for n in 2..=6 {
            let m = rng.random_range(1..=12);
            let sim = build_similarity(&random_ensemble(&mut rng, n, m)).unwrap();
            let model = build_correlation(
                &sim,
                &BuilderConfig::correlation(n).with_theoretical_penalty(),
            )
            .unwrap();
            let (_, optimum) = brute_force_consensus(&sim, ModelKind::Correlation, n).unwrap();
            let ctx = |what: &str| format!("seed {seed}, n={n}: {what}");

            if model.num_vars() <= qonsensus::oracle::MAX_BRUTE_FORCE_VARS {
                let (bits, energy) = brute_force_qubo(&model).unwrap();
                let (p, violations) = decode(&bits, &model).unwrap();
                ensure(violations == 0, || {
                    ctx("full scan minimizer is not one-hot")
                })?;
                ensure(energy == optimum, || {
                    ctx(&format!("full scan minimum {energy} != optimum {optimum}"))
                })?;
                ensure(
                    eval_objective(&p, &sim, ModelKind::Correlation).unwrap() == optimum,
                    || ctx("decoded full scan minimizer is not optimal"),
                )?;
            }
            if n >= 3 {
                let min = exhaustive_one_hot_minimum(&model).unwrap();
                ensure(min.strictly_feasible(), || {
                    ctx("an infeasible vector attains the minimum")
                })?;
                let (bits, energy) = min.best_feasible.unwrap();
                let (p, _) = decode(&bits, &model).unwrap();
                ensure(energy == optimum, || {
                    ctx(&format!("QUBO minimum {energy} != optimum {optimum}"))
                })?;
                ensure(
                    eval_objective(&p, &sim, ModelKind::Correlation).unwrap() == optimum,
                    || ctx("decoded minimizer is not optimal"),
                )?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} instances, n = 2..6"))
}

/// `100 · Σ_i d(p, π_i) = m · correlation objective` whenever m divides 100.
fn criterion_3() -> Outcome {
    let mut checked = 0u64;
    for m in C3_MEMBER_COUNTS {
        for seed in 0..C3_ENSEMBLES_PER_M {
            let mut rng = ChaCha8Rng::seed_from_u64(300 + 10 * m as u64 + seed);
            for n in 2..=6 {
                let ens = random_ensemble(&mut rng, n, m);
                let sim = build_similarity(&ens).unwrap();
                for p in enumerate_partitions(n, None).unwrap() {
                    let diff = partition_difference_objective(&p, &ens).unwrap() as i64;
                    let corr = eval_objective(&p, &sim, ModelKind::Correlation).unwrap();
                    ensure(100 * diff == m as i64 * corr, || {
                        format!(
                            "m={m}, n={n}, {:?}: 100·{diff} != {m}·{corr}",
                            p.assignment()
                        )
                    })?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} partitions, m ∈ {C3_MEMBER_COUNTS:?}"))
}

/// The annealer reaches the exhaustive optimum on small correlation instances.
fn criterion_4() -> Outcome {
    let params = AnnealParams {
        num_runs: 8,
        sweeps_per_run: 2000,
        ..AnnealParams::default()
    };
    let mut hits = 0;
    let mut misses = Vec::new();
    for i in 0..C4_INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + i);
        let sim = build_similarity(&random_ensemble(&mut rng, 8, C4_MEMBERS)).unwrap();
        let model = build_correlation(&sim, &BuilderConfig::correlation(4)).unwrap();
        let (_, optimum) = brute_force_consensus(&sim, ModelKind::Correlation, 4).unwrap();
        let report = anneal(
            &model,
            &AnnealParams {
                seed: i,
                ..params.clone()
            },
        )
        .unwrap();
        for (run, trace) in report.traces.iter().enumerate() {
            ensure(
                trace
                    .windows(2)
                    .all(|w| w[1].best_energy <= w[0].best_energy),
                || format!("instance {i}, run {run}: best-so-far increased"),
            )?;
        }
        let found = eval_objective(
            report.partition.as_ref().unwrap(),
            &sim,
            ModelKind::Correlation,
        )
        .unwrap();
        ensure(found >= optimum, || {
            format!("instance {i}: {found} beats the oracle {optimum}")
        })?;
        if found == optimum && report.violations == 0 {
            hits += 1;
        } else {
            misses.push(i);
        }
    }
    let msg = format!("{hits}/{C4_INSTANCES} optimal (need ≥ {C4_REQUIRED_HITS}); traces monotone");
    if hits >= C4_REQUIRED_HITS {
        Ok(msg)
    } else {
        Err(format!("{msg}; missed {misses:?}"))
    }
}

struct IrisSummary {
    mean_ari: f64,
    max_clusters: usize,
    min_clusters: usize,
}

type IrisResults = Vec<(Method, usize, IrisSummary)>;

/// DA-Cr, DA-Sm and HAC on Iris at K = 3 and K = 12, shared by criteria 5 and 6.
fn iris_results() -> &'static IrisResults {
    static RESULTS: OnceLock<IrisResults> = OnceLock::new();
    RESULTS.get_or_init(|| {
        let mut config = ExperimentConfig::new(data("iris.csv"), Method::Hac);
        config.seeds = IRIS_SEEDS.collect();
        config.anneal = AnnealParams {
            num_runs: IRIS_RUNS,
            sweeps_per_run: IRIS_SWEEPS,
            ..AnnealParams::default()
        };
        let mut runner = Runner::from_config(&config).unwrap();
        let mut out = Vec::new();
        for method in [Method::DaCr, Method::DaSm, Method::Hac] {
            for k in [3, 12] {
                config.method = method;
                config.k = KChoice::Explicit(k);
                let report = runner.run(&config).unwrap();
                let clusters = report.records.iter().map(|r| r.clusters_used);
                out.push((
                    method,
                    k,
                    IrisSummary {
                        mean_ari: report.aggregate.mean_ari.mean,
                        max_clusters: clusters.clone().max().unwrap(),
                        min_clusters: clusters.min().unwrap(),
                    },
                ));
            }
        }
        out
    })
}

fn iris(method: Method, k: usize) -> &'static IrisSummary {
    &iris_results()
        .iter()
        .find(|(m, kk, _)| *m == method && *kk == k)
        .unwrap()
        .2
}

/// Iris mean-ARI levels and cluster usage.
fn criterion_5() -> Outcome {
    let dacr3 = iris(Method::DaCr, 3).mean_ari;
    let hac3 = iris(Method::Hac, 3).mean_ari;
    let dacr12 = iris(Method::DaCr, 12);
    let hac12 = iris(Method::Hac, 12);
    let msg = format!(
        "DA-Cr K=3 {dacr3:.3}, HAC K=3 {hac3:.3}, DA-Cr K=12 clusters {}..{}, HAC K=12 clusters {}..{}",
        dacr12.min_clusters, dacr12.max_clusters, hac12.min_clusters, hac12.max_clusters
    );
    let ok = (dacr3 - C5_DACR_TARGET).abs() <= C5_TOLERANCE
        && (hac3 - C5_HAC_TARGET).abs() <= C5_TOLERANCE
        && dacr12.max_clusters <= C5_DACR_MAX_CLUSTERS
        && hac12.min_clusters == 12
        && hac12.max_clusters == 12;
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Pairwise methods degrade from K = 3 to K = 12; DA-Cr stays level.
fn criterion_6() -> Outcome {
    let drop = |m| iris(m, 3).mean_ari - iris(m, 12).mean_ari;
    let (sm, hac, cr) = (drop(Method::DaSm), drop(Method::Hac), drop(Method::DaCr));
    let msg = format!(
        "drop K=3→12: DA-Sm {sm:.3}, HAC {hac:.3} (need ≥ {C6_MIN_DROP}); DA-Cr change {:+.3} (need |·| ≤ {C6_DACR_BAND})",
        -cr
    );
    if sm >= C6_MIN_DROP && hac >= C6_MIN_DROP && cr.abs() <= C6_DACR_BAND {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn relabel(p: &Partition) -> Partition {
    let k = p.k();
    let labels: Vec<usize> = p.assignment().iter().map(|&l| (l * 7 + 3) % k).collect();
    Partition::from_labels(&labels)
}

/// Metric axioms, silhouette bounds and class-size CV of the bundled data.
fn criterion_7() -> Outcome {
    let mut pairs = 0u64;
    for n in 2..=5 {
        let parts: Vec<Partition> = enumerate_partitions(n, None).unwrap().collect();
        let total_pairs = (n * (n - 1) / 2) as f64;
        for a in &parts {
            ensure(
                (adjusted_rand_index(a, a).unwrap() - 1.0).abs() < FLOAT_EPS,
                || format!("ARI(p,p) != 1 for {:?}", a.assignment()),
            )?;
            for b in &parts {
                let ari = adjusted_rand_index(a, b).unwrap();
                let ri = rand_index(a, b).unwrap();
                let ctx = || format!("{:?} vs {:?}", a.assignment(), b.assignment());
                ensure(
                    (ari - adjusted_rand_index(b, a).unwrap()).abs() < FLOAT_EPS,
                    || format!("ARI asymmetric: {}", ctx()),
                )?;
                ensure((ri - rand_index(b, a).unwrap()).abs() < FLOAT_EPS, || {
                    format!("RI asymmetric: {}", ctx())
                })?;
                ensure(
                    (ari - adjusted_rand_index(&relabel(a), b).unwrap()).abs() < FLOAT_EPS,
                    || format!("ARI not relabel invariant: {}", ctx()),
                )?;
                ensure(
                    (ri - rand_index(a, &relabel(b)).unwrap()).abs() < FLOAT_EPS,
                    || format!("RI not relabel invariant: {}", ctx()),
                )?;
                let d = pair_disagreement(a, b).unwrap() as f64;
                ensure((ri - (1.0 - d / total_pairs)).abs() < FLOAT_EPS, || {
                    format!("RI != 1 − d/C(n,2): {}", ctx())
                })?;
                ensure((-1.0..=1.0 + FLOAT_EPS).contains(&ari), || {
                    format!("ARI out of range: {}", ctx())
                })?;
                pairs += 1;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(700);
    for case in 0..200 {
        let n = rng.random_range(3..40);
        let d = rng.random_range(1..5);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let ds = Dataset::new("random", rows, None).unwrap();
        let k = rng.random_range(2..=n.min(6));
        let mut p = random_partition(&mut rng, n, k);
        if p.k() < 2 {
            p = Partition::from_labels(&(0..n).map(|i| i % 2).collect::<Vec<_>>());
        }
        let s = silhouette(&ds, &p).unwrap();
        ensure((-1.0..=1.0).contains(&s), || {
            format!("silhouette case {case}: {s} out of range")
        })?;
    }

    let cv = |name: &str| {
        let ds = load_dataset(&data(name), false).unwrap();
        class_cv(ds.labels().unwrap().assignment()).unwrap()
    };
    let (iris_cv, wine_cv) = (cv("iris.csv"), cv("wine.csv"));
    ensure(iris_cv.abs() < 0.0005, || {
        format!("Iris CV {iris_cv:.4} != 0.000")
    })?;
    ensure((wine_cv - C7_WINE_CV).abs() <= C7_CV_TOLERANCE, || {
        format!("Wine CV {wine_cv:.4} != 0.158")
    })?;
    Ok(format!(
        "{pairs} partition pairs, 200 silhouette cases, CV Iris {iris_cv:.3} Wine {wine_cv:.3}"
    ))
}

fn experiment_bytes(threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    pool.install(|| {
        let mut config = ExperimentConfig::new(data("iris.csv"), Method::DaCr);
        config.seeds = vec![0, 1];
        config.k = KChoice::TwoKTrue;
        config.anneal = AnnealParams {
            num_runs: 4,
            sweeps_per_run: 200,
            ..AnnealParams::default()
        };
        let mut runner = Runner::from_config(&config).unwrap();
        let mut out = Vec::new();
        for method in [Method::DaCr, Method::DaSm, Method::DaBin, Method::Hac] {
            config.method = method;
            runner.run(&config).unwrap().write_jsonl(&mut out).unwrap();
        }
        out
    })
}

/// Identical configs give byte-identical records across thread counts.
fn criterion_8() -> Outcome {
    let one = experiment_bytes(1);
    let three = experiment_bytes(3);
    let again = experiment_bytes(3);
    ensure(one == three, || {
        "1-thread and 3-thread records differ".into()
    })?;
    ensure(three == again, || "repeated 3-thread runs differ".into())?;
    Ok(format!(
        "{} bytes identical across 1 and 3 threads",
        one.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, criterion_1, Duration::from_secs(60)),
        (2, criterion_2, Duration::from_secs(300)),
        (3, criterion_3, Duration::MAX),
        (4, criterion_4, Duration::from_secs(120)),
        (5, criterion_5, Duration::from_secs(600)),
        (6, criterion_6, Duration::MAX),
        (7, criterion_7, Duration::MAX),
        (8, criterion_8, Duration::MAX),
    ];
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for (id, _, _) in &criteria {
            println!("criterion_{id}: test");
        }
        return;
    }
    let selected: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, check, limit) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > limit => {
                Err(format!("{msg}; took {elapsed:.1?}, limit {limit:.0?}"))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("criterion {id}: PASS ({elapsed:.1?}) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id}: FAIL ({elapsed:.1?}) {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
