//! The `memcode` command line.
//!
//! Tables are CSV files (`bits,probability`) or built-ins: `builtin:four-state`,
//! `builtin:cards`, `builtin:uniform:<n>`, `builtin:correlated:<dim>:<coupling>`.
//! Every command prints its report to stdout and, with `--out`, writes the
//! same report to a file in that directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::codec::MlpCodec;
use crate::datasets::{correlated_bits_table, four_state_table, playing_cards_table, EventTable};
use crate::error::{domain, Error, Result};
use crate::info::{entropy, max_entropy, redundancy, ProbDist};
use crate::loss::LossWeights;
use crate::memory::{MemoryStore, NeighborhoodSpec};
use crate::oracle::{self, OracleProblem, OracleRow};
use crate::trainer::{ModelConfig, TrainConfig, TrainReport, Trainer};

/// Environment variable holding the worker thread count of the oracle.
pub const THREADS_ENV: &str = "MEMCODE_THREADS";

/// Largest memory dimension for a full lattice density report.
pub const MAX_DENSITY_DIM: usize = 12;

#[derive(Debug, Parser)]
#[command(
    name = "memcode",
    version,
    about = "Memory-augmented autoencoder experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entropy, maximum entropy, redundancy and bit marginals of a table.
    Analyze(AnalyzeArgs),
    /// Exact minimum of the expected loss for each weight setting.
    Oracle(OracleArgs),
    /// Streaming training of the multilayer codec.
    Train(TrainArgs),
    /// Reports on a saved memory store.
    Memory(MemoryArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub table: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub table: Option<String>,
    /// `alpha:beta[,alpha:beta...]`
    #[arg(long, allow_hyphen_values = true)]
    pub weights: Option<String>,
    #[arg(long)]
    pub num_memories: Option<usize>,
    /// Search decoder rows on a grid of this step instead of solving them.
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub table: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Continue from the checkpoints in `--out`.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MemoryReport {
    Stats,
    Density,
    Export,
}

#[derive(Debug, Args)]
pub struct MemoryArgs {
    pub report: MemoryReport,
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Neighborhood size of the density estimator.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of most frequent memories listed by `stats`.
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default)]
    pub weights: Option<String>,
    #[serde(default)]
    pub num_memories: Option<usize>,
    #[serde(default)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemorySection {
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default = "ten")]
    pub top: usize,
}

fn one() -> usize {
    1
}

fn ten() -> usize {
    10
}

impl Default for MemorySection {
    fn default() -> Self {
        Self { n: 1, top: 10 }
    }
}

/// Parameters of every command, loadable from TOML. Command-line flags take
/// precedence over the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub table: Option<String>,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub memory: MemorySection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            message: e.message().to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    path.map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
}

/// Resolves a table argument: a built-in name or a CSV path.
pub fn resolve_table(spec: &str) -> Result<EventTable> {
    let Some(name) = spec.strip_prefix("builtin:") else {
        return EventTable::read_csv(fs::File::open(spec)?);
    };
    let parts: Vec<&str> = name.split(':').collect();
    let num = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Domain(format!("bad number {s:?} in table {spec:?}")))
    };
    match parts.as_slice() {
        ["four-state"] => Ok(four_state_table()),
        ["cards"] => Ok(playing_cards_table()),
        ["uniform", n] => {
            let n = num(n)? as usize;
            if n == 0 {
                return domain("uniform table needs at least one event");
            }
            let dim = (usize::BITS - (n - 1).leading_zeros()).max(1) as usize;
            let events = (0..n as u64)
                .map(|i| BitVector::from_index(i, dim))
                .collect();
            EventTable::new(events, ProbDist::uniform(n)?)
        }
        ["correlated", dim, coupling] => correlated_bits_table(num(dim)? as usize, num(coupling)?),
        _ => domain(format!("unknown built-in table {spec:?}")),
    }
}

/// Parses `alpha:beta[,alpha:beta...]`; an empty string is an empty list.
pub fn parse_weights(text: &str) -> Result<Vec<LossWeights>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (a, b) = pair
                .split_once(':')
                .ok_or_else(|| Error::Domain(format!("weights {pair:?} are not alpha:beta")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Domain(format!("bad weight {s:?}")))
            };
            LossWeights::new(parse(a)?, parse(b)?)
        })
        .collect()
}

fn table_arg(flag: Option<&String>, config: &ExperimentConfig) -> Result<EventTable> {
    match flag.or(config.table.as_ref()) {
        Some(t) => resolve_table(t),
        None => domain("no table given; pass --table or set `table` in the config"),
    }
}

/// Writes through a temporary file so readers never see partial output.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn emit(out: Option<&Path>, file: &str, text: &str) -> Result<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_atomic(&dir.join(file), text.as_bytes())?;
    }
    Ok(())
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<String> {
    let config = load_config(args.config.as_deref())?;
    let table = table_arg(args.table.as_ref(), &config)?;
    let mut s = String::new();
    writeln!(s, "events = {}", table.len()).unwrap();
    writeln!(s, "dim = {}", table.dim()).unwrap();
    writeln!(s, "entropy = {:.4}", entropy(&table.dist)).unwrap();
    writeln!(s, "max_entropy = {:.4}", max_entropy(table.len())?).unwrap();
    writeln!(s, "redundancy = {:.4}", redundancy(&table.dist)).unwrap();
    for (i, m) in table.marginals().iter().enumerate() {
        writeln!(s, "marginal_bit_{} = {m:.4}", i + 1).unwrap();
    }
    emit(args.out.as_deref(), "analyze.txt", &s)?;
    Ok(s)
}

/// Sets the global worker pool from [`THREADS_ENV`] if it is present.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| {
        Error::Domain(format!(
            "{THREADS_ENV} must be a positive integer, got {v:?}"
        ))
    })?;
    if n == 0 {
        return domain(format!("{THREADS_ENV} must be positive"));
    }
    // A pool that is already built keeps its size.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<String> {
    let config = load_config(args.config.as_deref())?;
    let table = table_arg(args.table.as_ref(), &config)?;
    let weights = match args.weights.as_ref().or(config.oracle.weights.as_ref()) {
        Some(w) => parse_weights(w)?,
        None => return domain("no weights given; pass --weights or set oracle.weights"),
    };
    let num_memories = args
        .num_memories
        .or(config.oracle.num_memories)
        .unwrap_or(table.len());
    let grid_step = args.grid_step.or(config.oracle.grid_step);
    configure_threads()?;
    let mut rows = Vec::with_capacity(weights.len());
    for w in weights {
        let problem =
            OracleProblem::new(table.events.clone(), table.dist.clone(), num_memories, w)?;
        let solution = match grid_step {
            Some(step) => oracle::solve_with_grid_decoder(&problem, step)?,
            None => oracle::solve(&problem)?,
        };
        rows.push(OracleRow {
            weights: w,
            solution,
        });
    }
    let mut buf = Vec::new();
    oracle::write_oracle_csv(&rows, &table.labels, &mut buf)?;
    let s = String::from_utf8(buf).expect("utf-8 csv");
    emit(args.out.as_deref(), "oracle.csv", &s)?;
    Ok(s)
}

const CODEC_FILE: &str = "codec.txt";
const STORE_FILE: &str = "store.txt";
const PROGRESS_FILE: &str = "progress.txt";
const CONFIG_FILE: &str = "config.toml";

fn save_checkpoint(dir: &Path, t: &Trainer) -> Result<()> {
    let mut buf = Vec::new();
    t.codec.save(&mut buf)?;
    write_atomic(&dir.join(CODEC_FILE), &buf)?;
    t.store.save_to_path(&dir.join(STORE_FILE))?;
    let mut buf = Vec::new();
    t.report.save_progress(&mut buf)?;
    write_atomic(&dir.join(PROGRESS_FILE), &buf)?;
    let mut buf = Vec::new();
    t.report.write_epochs_csv(&mut buf)?;
    write_atomic(&dir.join("epochs.csv"), &buf)?;
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<String> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(t) = &args.table {
        config.table = Some(t.clone());
    }
    if config.table.is_none() {
        config.table = Some("builtin:four-state".into());
    }
    if let Some(seed) = args.seed {
        config.train.seed = seed;
    }
    let table = table_arg(None, &config)?;
    let dir = args.out.as_path();
    fs::create_dir_all(dir)?;
    let resolved = config.to_toml();
    let started = SystemTime::now();

    let mut trainer = if args.resume {
        // Only the epoch budget may change between runs.
        let mut saved = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
        saved.train.epochs = config.train.epochs;
        if saved != config {
            return domain("resume configuration differs from the checkpointed run");
        }
        write_atomic(&dir.join(CONFIG_FILE), resolved.as_bytes())?;
        let codec = MlpCodec::load(fs::File::open(dir.join(CODEC_FILE))?)?;
        let store = MemoryStore::load_from_path(&dir.join(STORE_FILE))?;
        let report = TrainReport::load_progress(fs::File::open(dir.join(PROGRESS_FILE))?)?;
        Trainer::resume(table, config.train.clone(), codec, store, report)?
    } else {
        write_atomic(&dir.join(CONFIG_FILE), resolved.as_bytes())?;
        Trainer::new(table, config.train.clone(), &config.model)?
    };
    save_checkpoint(dir, &trainer)?;
    while !trainer.is_finished() {
        trainer.run_epoch()?;
        save_checkpoint(dir, &trainer)?;
    }

    let mut summary = Vec::new();
    trainer.report.write_summary(&mut summary)?;
    write_atomic(&dir.join("summary.txt"), &summary)?;
    let elapsed = started.elapsed().map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let log = format!(
        "finished_unix = {stamp}\nelapsed_seconds = {elapsed:.3}\nresumed = {}\n",
        args.resume
    );
    fs::write(dir.join("run.log"), log)?;
    Ok(String::from_utf8(summary).expect("utf-8 summary"))
}

/// Lattice points that are at least as probable as every Hamming neighbor
/// and have positive probability.
fn count_peaks(dim: usize, density: &[f64]) -> usize {
    (0..density.len())
        .filter(|&i| density[i] > 0.0 && (0..dim).all(|b| density[i] >= density[i ^ (1 << b)]))
        .count()
}

pub fn cmd_memory(args: &MemoryArgs) -> Result<String> {
    let config = load_config(args.config.as_deref())?;
    let n = args.n.unwrap_or(config.memory.n);
    let top = args.top.unwrap_or(config.memory.top);
    let store = MemoryStore::load_from_path(&args.store)?;
    let out = args.out.as_deref();
    match args.report {
        MemoryReport::Stats => {
            let mut s = String::new();
            writeln!(s, "dim = {}", store.dim()).unwrap();
            writeln!(s, "records = {}", store.len()).unwrap();
            writeln!(s, "distinct = {}", store.distinct()).unwrap();
            for (k, (m, c)) in store.top_k(top).iter().enumerate() {
                let f = *c as f64 / store.len() as f64;
                writeln!(s, "top_{} = {m} {c} {f:.4}", k + 1).unwrap();
            }
            emit(out, "memory_stats.txt", &s)?;
            Ok(s)
        }
        MemoryReport::Density => {
            let d = store.dim();
            if d > MAX_DENSITY_DIM {
                return Err(Error::Refused(format!(
                    "memory dimension {d} exceeds the density report limit {MAX_DENSITY_DIM}"
                )));
            }
            if store.is_empty() {
                return domain("density needs a non-empty store");
            }
            let spec = NeighborhoodSpec::new(n)?;
            let mut csv = String::from("memory,probability\n");
            let mut density = Vec::with_capacity(1 << d);
            for i in 0..1u64 << d {
                let m = BitVector::from_index(i, d);
                let p = store.smoothed_probability(&m, spec)?;
                writeln!(csv, "{m},{p:.4}").unwrap();
                density.push(p);
            }
            emit(out, "memory_density.csv", &csv)?;
            Ok(format!(
                "lattice_points = {}\npeaks = {}\ndistinct = {}\n",
                density.len(),
                count_peaks(d, &density),
                store.distinct()
            ))
        }
        MemoryReport::Export => {
            let mut csv = String::from("seq,memory\n");
            for r in store.records() {
                writeln!(csv, "{},{}", r.seq, r.vector).unwrap();
            }
            emit(out, "memory_export.csv", &csv)?;
            Ok(csv)
        }
    }
}

pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Train(a) => cmd_train(a),
        Command::Memory(a) => cmd_memory(a),
    }
}

/// Process entry point; returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}
