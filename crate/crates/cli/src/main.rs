use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use qonsensus::consensus::{ConsensusConfig, Penalty};
use qonsensus::ensemble::{write_ensemble_csv, DEFAULT_MAX_ITERS, DEFAULT_MEMBERS};
use qonsensus::metrics::class_cv;
use qonsensus::similarity::build_similarity;
use qonsensus::{AnnealParams, Method};
use qonsensus_cli::cache::CACHE_DIR_ENV;
use qonsensus_cli::error::{Result, Stage, StageError};
use qonsensus_cli::experiment::AggregateRecord;
use qonsensus_cli::{
    emit_table, load_dataset, read_records, sort_records, ExperimentConfig, KChoice, Runner,
};

#[derive(Parser)]
#[command(
    name = "qonsensus",
    version,
    about = "Consensus clustering via QUBO annealing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded experiments and emit JSON-lines records.
    Run(RunArgs),
    /// Render a result table from JSON-lines record files.
    Table(TableArgs),
    /// Generate (or load cached) a K-Means ensemble and write it as CSV.
    Ensemble(EnsembleArgs),
    /// Write the QUBO model for one method and ensemble in text form.
    Model(ModelArgs),
    /// Print dataset size, dimension, class count and class-size CV.
    Stats(StatsArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV with a header row and an optional `label` column.
    #[arg(long)]
    dataset: PathBuf,
    /// Standardize features to zero mean and unit variance.
    #[arg(long)]
    standardize: bool,
    /// True cluster count; defaults to the number of distinct labels.
    #[arg(long)]
    k_true: Option<usize>,
}

#[derive(Args)]
struct EnsembleOpts {
    /// Ensemble size.
    #[arg(long, default_value_t = DEFAULT_MEMBERS)]
    m: usize,
    /// K-Means iteration cap.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
}

#[derive(Args)]
struct SolverOpts {
    /// Annealer runs (parallel trials).
    #[arg(long, default_value_t = AnnealParams::default().num_runs)]
    runs: usize,
    /// Sweeps per run.
    #[arg(long, default_value_t = AnnealParams::default().sweeps_per_run)]
    sweeps: usize,
    /// Initial temperature; defaults to the largest absolute coefficient.
    #[arg(long)]
    t_initial: Option<f64>,
    #[arg(long, default_value_t = AnnealParams::default().t_final)]
    t_final: f64,
    /// Offset growth per rejected trial.
    #[arg(long, default_value_t = AnnealParams::default().offset_increment)]
    offset_increment: f64,
    /// One-hot penalty: `default`, `theoretical` (100·n) or an integer.
    #[arg(long, default_value = "default", value_parser = parse_penalty)]
    penalty: Penalty,
    /// Wall-clock limit per annealer call, in seconds; makes results timing-dependent.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl SolverOpts {
    fn anneal_params(&self) -> AnnealParams {
        AnnealParams {
            num_runs: self.runs,
            sweeps_per_run: self.sweeps,
            t_initial: self.t_initial,
            t_final: self.t_final,
            offset_increment: self.offset_increment,
            time_limit: self.time_limit.map(Duration::from_secs_f64),
            seed: 0,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Methods, comma separated: da-sm, da-cr, da-bin, hac.
    #[arg(long, value_delimiter = ',', required = true)]
    method: Vec<Method>,
    /// Explicit cluster budget; overrides --k-mode.
    #[arg(long)]
    k: Option<usize>,
    /// `k-true` or `2k-true`.
    #[arg(long, default_value = "k-true")]
    k_mode: KChoice,
    /// Seeds, comma separated; `a..b` expands to a half-open range.
    #[arg(long, default_value = "0", value_delimiter = ',', value_parser = parse_seeds)]
    seed: Vec<Vec<u64>>,
    #[command(flatten)]
    ensemble: EnsembleOpts,
    #[command(flatten)]
    solver: SolverOpts,
    /// JSON-lines output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-run annealer traces as CSV into this directory.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Include wall-clock times in the records.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct TableArgs {
    /// JSON-lines record files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct EnsembleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    ensemble: EnsembleOpts,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    ensemble: EnsembleOpts,
    /// da-sm, da-cr or da-bin.
    #[arg(long)]
    method: Method,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "k-true")]
    k_mode: KChoice,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "default", value_parser = parse_penalty)]
    penalty: Penalty,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    dataset: PathBuf,
}

fn parse_penalty(s: &str) -> std::result::Result<Penalty, String> {
    match s {
        "default" => Ok(Penalty::Default),
        "theoretical" => Ok(Penalty::Theoretical),
        other => other
            .parse()
            .map(Penalty::Fixed)
            .map_err(|_| format!("expected default, theoretical or an integer, got {other:?}")),
    }
}

fn parse_seeds(s: &str) -> std::result::Result<Vec<u64>, String> {
    let bad = |_| format!("invalid seed {s:?}");
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b): (u64, u64) = (a.parse().map_err(bad)?, b.parse().map_err(bad)?);
            if a >= b {
                return Err(format!("empty seed range {s:?}"));
            }
            Ok((a..b).collect())
        }
        None => Ok(vec![s.parse().map_err(bad)?]),
    }
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(
            |e| StageError::new(Stage::Output, format!("{}: {e}", p.display())),
        )?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn io_err(e: std::io::Error) -> StageError {
    StageError::new(Stage::Output, e.to_string())
}

fn run(args: RunArgs) -> Result<()> {
    let seeds: Vec<u64> = args.seed.into_iter().flatten().collect();
    let mut config = ExperimentConfig::new(&args.data.dataset, args.method[0]);
    config.k = args.k.map_or(args.k_mode, KChoice::Explicit);
    config.k_true = args.data.k_true;
    config.m = args.ensemble.m;
    config.max_iters = args.ensemble.max_iters;
    config.anneal = args.solver.anneal_params();
    config.penalty = args.solver.penalty;
    config.standardize = args.data.standardize;
    config.seeds = seeds;
    config.cache_dir = cache_dir();
    config.trace_dir = args.trace_dir;
    config.include_timing = args.timing;

    let mut runner = Runner::from_config(&config)?;
    let mut reports = Vec::new();
    for &method in &args.method {
        config.method = method;
        reports.push(runner.run(&config)?);
    }
    let mut records: Vec<_> = reports
        .iter()
        .flat_map(|r| r.records.iter().cloned())
        .collect();
    sort_records(&mut records);
    let aggregates: Vec<AggregateRecord> = reports.iter().map(|r| r.aggregate.clone()).collect();
    let mut out = output(args.out.as_deref())?;
    for r in &records {
        let line =
            serde_json::to_string(r).map_err(|e| StageError::new(Stage::Output, e.to_string()))?;
        writeln!(out, "{line}").map_err(io_err)?;
    }
    for a in &aggregates {
        let line =
            serde_json::to_string(a).map_err(|e| StageError::new(Stage::Output, e.to_string()))?;
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    if args.out.is_some() {
        eprint!("{}", emit_table(&records).0);
    }
    Ok(())
}

fn table(args: TableArgs) -> Result<()> {
    let mut records = Vec::new();
    for path in &args.inputs {
        let text = std::fs::read_to_string(path)
            .map_err(|e| StageError::new(Stage::Load, format!("{}: {e}", path.display())))?;
        records.extend(read_records(&text)?);
    }
    if records.is_empty() {
        return Err(StageError::new(Stage::Load, "no records found"));
    }
    sort_records(&mut records);
    let (text, csv) = emit_table(&records);
    print!("{text}");
    if let Some(path) = &args.csv {
        std::fs::write(path, csv)
            .map_err(|e| StageError::new(Stage::Output, format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn ensemble_for(
    data: &DataArgs,
    opts: &EnsembleOpts,
    seed: u64,
) -> Result<(Runner, qonsensus::Ensemble)> {
    let dataset = load_dataset(&data.dataset, data.standardize)?;
    let mut runner = Runner::new(dataset, data.k_true, cache_dir())?;
    let ens = runner.ensemble(seed, opts.m, opts.max_iters)?.clone();
    Ok((runner, ens))
}

fn ensemble(args: EnsembleArgs) -> Result<()> {
    let (_, ens) = ensemble_for(&args.data, &args.ensemble, args.seed)?;
    let mut out = output(args.out.as_deref())?;
    write_ensemble_csv(&ens, &mut out)
        .map_err(|e| StageError::new(Stage::Output, e.to_string()))?;
    out.flush().map_err(io_err)
}

fn model(args: ModelArgs) -> Result<()> {
    if args.method == Method::Hac {
        return Err(StageError::new(Stage::Config, "hac has no QUBO model"));
    }
    let (runner, ens) = ensemble_for(&args.data, &args.ensemble, args.seed)?;
    let k = args
        .k
        .map_or(args.k_mode, KChoice::Explicit)
        .resolve(runner.k_true());
    let mut cc = ConsensusConfig::new(args.method, k);
    cc.penalty = args.penalty;
    let sim =
        build_similarity(&ens).map_err(|e| StageError::new(Stage::Consensus, e.to_string()))?;
    let model = cc
        .build_model(&sim)
        .map_err(|e| StageError::new(Stage::Consensus, e.to_string()))?
        .expect("non-hac methods build a model");
    let mut out = output(args.out.as_deref())?;
    model
        .write_text(&mut out)
        .map_err(|e| StageError::new(Stage::Output, e.to_string()))?;
    out.flush().map_err(io_err)
}

fn stats(args: StatsArgs) -> Result<()> {
    let ds = load_dataset(&args.dataset, false)?;
    println!("dataset: {}", ds.name());
    println!("n: {}", ds.num_points());
    println!("d: {}", ds.num_features());
    match ds.labels() {
        Some(labels) => {
            let cv = class_cv(labels.assignment())
                .map_err(|e| StageError::new(Stage::Metrics, e.to_string()))?;
            println!("classes: {}", labels.k());
            println!("class_cv: {cv:.3}");
        }
        None => println!("classes: -"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Table(a) => table(a),
        Command::Ensemble(a) => ensemble(a),
        Command::Model(a) => model(a),
        Command::Stats(a) => stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
