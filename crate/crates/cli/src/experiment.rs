//! Seeded experiment protocol: ensemble → consensus → metrics → records.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qonsensus::annealer::write_trace_csv;
use qonsensus::consensus::{ConsensusConfig, Penalty};
use qonsensus::metrics::{
    adjusted_rand_index, mean_ari, partition_difference_objective, silhouette,
};
use qonsensus::qubo::eval_objective;
use qonsensus::{
    run_consensus, AnnealParams, Dataset, Ensemble, EnsembleConfig, Method, ModelKind, SolveReport,
};
use serde::{Deserialize, Serialize};

use crate::cache::load_or_generate;
use crate::data::load_dataset;
use crate::error::{at, Result, Stage, StageError};

pub const SCHEMA_VERSION: u32 = 1;

/// How the cluster budget K is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KChoice {
    /// K = K̃, the number of ground-truth classes.
    KTrue,
    /// K = 2·K̃.
    TwoKTrue,
    Explicit(usize),
}

impl KChoice {
    pub fn resolve(self, k_true: usize) -> usize {
        match self {
            KChoice::KTrue => k_true,
            KChoice::TwoKTrue => 2 * k_true,
            KChoice::Explicit(k) => k,
        }
    }
}

impl fmt::Display for KChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KChoice::KTrue => f.write_str("k-true"),
            KChoice::TwoKTrue => f.write_str("2k-true"),
            KChoice::Explicit(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for KChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "k-true" | "k_true" => Ok(KChoice::KTrue),
            "2k-true" | "2k_true" => Ok(KChoice::TwoKTrue),
            other => other
                .parse()
                .map(KChoice::Explicit)
                .map_err(|_| format!("expected k-true, 2k-true or an integer, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset_path: PathBuf,
    pub method: Method,
    pub k: KChoice,
    /// Overrides the class count read from the `label` column.
    pub k_true: Option<usize>,
    pub m: usize,
    pub max_iters: usize,
    pub anneal: AnnealParams,
    pub penalty: Penalty,
    pub standardize: bool,
    /// One record per seed; the seed drives both the ensemble and the annealer.
    pub seeds: Vec<u64>,
    pub output_path: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    /// Per-run annealer traces are written here as CSV.
    pub trace_dir: Option<PathBuf>,
    /// Adds wall-clock fields, which makes records run-dependent.
    pub include_timing: bool,
}

impl ExperimentConfig {
    pub fn new(dataset_path: impl Into<PathBuf>, method: Method) -> Self {
        ExperimentConfig {
            dataset_path: dataset_path.into(),
            method,
            k: KChoice::KTrue,
            k_true: None,
            m: qonsensus::ensemble::DEFAULT_MEMBERS,
            max_iters: qonsensus::ensemble::DEFAULT_MAX_ITERS,
            anneal: AnnealParams::default(),
            penalty: Penalty::Default,
            standardize: false,
            seeds: vec![0],
            output_path: None,
            cache_dir: None,
            trace_dir: None,
            include_timing: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(StageError::new(
                Stage::Config,
                "at least one seed is required",
            ));
        }
        if self.m == 0 {
            return Err(StageError::new(Stage::Config, "m must be positive"));
        }
        Ok(())
    }
}

/// One seed's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub schema: u32,
    pub dataset: String,
    pub method: String,
    pub k: usize,
    pub k_true: usize,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    /// Consensus criterion: mean ARI against the ensemble members.
    pub mean_ari: f64,
    /// `None` when fewer than two clusters are used.
    pub silhouette: Option<f64>,
    /// ARI against the ground-truth labels, when present.
    pub accuracy_ari: Option<f64>,
    pub clusters_used: usize,
    pub pairwise_objective: i64,
    pub correlation_objective: i64,
    /// Σ over members of the pair disagreements with the consensus.
    pub partition_difference: u64,
    pub qubo_energy: Option<i64>,
    pub violations: Option<usize>,
    pub runs: Option<usize>,
    /// Configured sweeps per run.
    pub sweeps: Option<usize>,
    /// Sweeps completed across all runs; below runs × sweeps only under a time limit.
    pub sweeps_done: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    /// Sample SD (n − 1); zero for a single value.
    pub fn of(values: &[f64]) -> Option<MeanSd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(MeanSd { mean, sd })
    }
}

/// Summary across seeds of one (dataset, method, K).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub schema: u32,
    pub aggregate: bool,
    pub dataset: String,
    pub method: String,
    pub k: usize,
    pub seeds: usize,
    pub mean_ari: MeanSd,
    pub silhouette: Option<MeanSd>,
    pub accuracy_ari: Option<MeanSd>,
    pub clusters_used: MeanSd,
}

impl AggregateRecord {
    /// `records` must share dataset, method and K.
    pub fn from_records(records: &[SeedRecord]) -> Option<AggregateRecord> {
        let first = records.first()?;
        let pick = |f: fn(&SeedRecord) -> Option<f64>| -> Option<MeanSd> {
            let values: Option<Vec<f64>> = records.iter().map(f).collect();
            values.and_then(|v| MeanSd::of(&v))
        };
        Some(AggregateRecord {
            schema: SCHEMA_VERSION,
            aggregate: true,
            dataset: first.dataset.clone(),
            method: first.method.clone(),
            k: first.k,
            seeds: records.len(),
            mean_ari: pick(|r| Some(r.mean_ari))?,
            silhouette: pick(|r| r.silhouette),
            accuracy_ari: pick(|r| r.accuracy_ari),
            clusters_used: pick(|r| Some(r.clusters_used as f64))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<SeedRecord>,
    pub aggregate: AggregateRecord,
}

impl ExperimentReport {
    /// JSON lines: seed records, then the aggregate row.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            let line = serde_json::to_string(r).map_err(at(Stage::Output))?;
            writeln!(out, "{line}").map_err(at(Stage::Output))?;
        }
        let line = serde_json::to_string(&self.aggregate).map_err(at(Stage::Output))?;
        writeln!(out, "{line}").map_err(at(Stage::Output))
    }
}

/// Deterministic merge order for records from concurrent workers.
pub fn sort_records(records: &mut [SeedRecord]) {
    records.sort_by(|a, b| {
        (&a.dataset, &a.method, a.k, a.seed).cmp(&(&b.dataset, &b.method, b.k, b.seed))
    });
}

/// Holds one dataset and its ensembles so several methods and K values
/// score against identical ensembles.
pub struct Runner {
    dataset: Dataset,
    k_true: usize,
    cache_dir: Option<PathBuf>,
    ensembles: HashMap<(u64, usize, usize), Ensemble>,
}

impl Runner {
    pub fn new(
        dataset: Dataset,
        k_true: Option<usize>,
        cache_dir: Option<PathBuf>,
    ) -> Result<Self> {
        let k_true = k_true.or_else(|| dataset.num_classes()).ok_or_else(|| {
            StageError::new(
                Stage::Config,
                "dataset has no labels; pass the true cluster count",
            )
        })?;
        if k_true == 0 {
            return Err(StageError::new(
                Stage::Config,
                "true cluster count must be positive",
            ));
        }
        Ok(Runner {
            dataset,
            k_true,
            cache_dir,
            ensembles: HashMap::new(),
        })
    }

    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        let dataset = load_dataset(&config.dataset_path, config.standardize)?;
        Runner::new(dataset, config.k_true, config.cache_dir.clone())
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn k_true(&self) -> usize {
        self.k_true
    }

    pub fn ensemble(&mut self, seed: u64, m: usize, max_iters: usize) -> Result<&Ensemble> {
        let key = (seed, m, max_iters);
        if !self.ensembles.contains_key(&key) {
            let config = EnsembleConfig {
                m,
                k_true: self.k_true,
                max_iters,
                seed,
            };
            let ens = load_or_generate(&self.dataset, &config, self.cache_dir.as_deref())?;
            self.ensembles.insert(key, ens);
        }
        Ok(&self.ensembles[&key])
    }

    pub fn run(&mut self, config: &ExperimentConfig) -> Result<ExperimentReport> {
        config.validate()?;
        let k = config.k.resolve(self.k_true);
        let mut records = Vec::with_capacity(config.seeds.len());
        for &seed in &config.seeds {
            let ensemble = self.ensemble(seed, config.m, config.max_iters)?.clone();
            records.push(self.run_seed(config, k, seed, &ensemble)?);
        }
        sort_records(&mut records);
        let aggregate = AggregateRecord::from_records(&records).expect("seeds are non-empty");
        Ok(ExperimentReport { records, aggregate })
    }

    fn run_seed(
        &self,
        config: &ExperimentConfig,
        k: usize,
        seed: u64,
        ensemble: &Ensemble,
    ) -> Result<SeedRecord> {
        let mut cc = ConsensusConfig::new(config.method, k);
        cc.penalty = config.penalty;
        cc.anneal = AnnealParams {
            seed,
            ..config.anneal.clone()
        };
        let result = run_consensus(ensemble, &cc).map_err(at(Stage::Consensus))?;
        let p = &result.partition;
        let sim = &result.similarity;
        let silhouette = if p.k() >= 2 {
            Some(silhouette(&self.dataset, p).map_err(at(Stage::Metrics))?)
        } else {
            None
        };
        let accuracy_ari = match self.dataset.labels() {
            Some(labels) => Some(adjusted_rand_index(labels, p).map_err(at(Stage::Metrics))?),
            None => None,
        };
        let solve = result.solve.as_ref();
        if let (Some(dir), Some(report)) = (&config.trace_dir, solve) {
            self.write_traces(dir, config.method, k, seed, report)?;
        }
        Ok(SeedRecord {
            schema: SCHEMA_VERSION,
            dataset: self.dataset.name().to_string(),
            method: config.method.to_string(),
            k,
            k_true: self.k_true,
            seed,
            n: self.dataset.num_points(),
            m: ensemble.len(),
            mean_ari: mean_ari(p, ensemble).map_err(at(Stage::Metrics))?,
            silhouette,
            accuracy_ari,
            clusters_used: p.k(),
            pairwise_objective: eval_objective(p, sim, ModelKind::Pairwise)
                .map_err(at(Stage::Metrics))?,
            correlation_objective: eval_objective(p, sim, ModelKind::Correlation)
                .map_err(at(Stage::Metrics))?,
            partition_difference: partition_difference_objective(p, ensemble)
                .map_err(at(Stage::Metrics))?,
            qubo_energy: solve.map(|s| s.best_energy),
            violations: solve.map(|s| s.violations),
            runs: solve.map(|_| config.anneal.num_runs),
            sweeps: solve.map(|_| config.anneal.sweeps_per_run),
            sweeps_done: solve.map(|s| s.sweeps_done),
            wall_time_ms: config
                .include_timing
                .then_some(result.wall_time.as_secs_f64() * 1e3),
        })
    }
}

impl Runner {
    fn write_traces(
        &self,
        dir: &Path,
        method: Method,
        k: usize,
        seed: u64,
        report: &SolveReport,
    ) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(at(Stage::Output))?;
        for (run, trace) in report.traces.iter().enumerate() {
            let name = format!("{}-{method}-k{k}-s{seed}-r{run}.csv", self.dataset.name());
            let file = std::fs::File::create(dir.join(name)).map_err(at(Stage::Output))?;
            write_trace_csv(trace, std::io::BufWriter::new(file)).map_err(at(Stage::Output))?;
        }
        Ok(())
    }
}

/// Runs every seed of `config`, writing JSON lines to `output_path` when set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut runner = Runner::from_config(config)?;
    let report = runner.run(config)?;
    if let Some(path) = &config.output_path {
        write_report_file(&report, path)?;
    }
    Ok(report)
}

pub fn write_report_file(report: &ExperimentReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| StageError::new(Stage::Output, format!("{}: {e}", path.display())))?;
    let mut out = std::io::BufWriter::new(file);
    report.write_jsonl(&mut out)?;
    out.flush().map_err(at(Stage::Output))
}

/// Parses JSON lines, keeping seed records and skipping aggregate rows.
pub fn read_records(text: &str) -> Result<Vec<SeedRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| StageError::new(Stage::Load, format!("line {}: {e}", i + 1)))?;
        if value.get("aggregate").is_some() {
            continue;
        }
        if value.get("schema").and_then(|s| s.as_u64()) != Some(u64::from(SCHEMA_VERSION)) {
            return Err(StageError::new(
                Stage::Load,
                format!("line {}: unsupported schema", i + 1),
            ));
        }
        out.push(
            serde_json::from_value(value)
                .map_err(|e| StageError::new(Stage::Load, format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}
