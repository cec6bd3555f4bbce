//! `npusim` command-line driver.
//!
//! Exit codes: 0 success, 1 user error (flags, config, trace), 2 internal
//! invariant violation, 3 cache-model validation mismatch.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use npusim_core::config::{
    parse_hardware_config, parse_workload_config, EmbeddingLayer, MemLevelConfig, PolicyConfig,
    Reduce,
};
use npusim_core::engine::{parse_energy_table, run_simulation, SimReport};
use npusim_core::error::SimError;
use npusim_core::onchip_mem::{hit_sequence, ref_cache_outcomes};
use npusim_core::sweep::{run_batch_sweep, write_sweep_csv, BatchSweep};
use npusim_core::trace::{
    gen_zipfian_trace, load_trace, translate_lookups, IndexTrace, Lookup, TablePlacement,
};

#[derive(Parser, Debug)]
#[command(
    name = "npusim",
    version,
    about = "Trace-driven NPU performance simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a workload on a machine and write the report.
    Run(RunArgs),
    /// Generate a seeded Zipfian index trace.
    GenTrace(GenTraceArgs),
    /// Replay a trace through the cache model and the reference model.
    ValidateCache(ValidateArgs),
    /// Summarize a saved report, optionally converting it to CSV.
    Report(ReportArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    #[arg(long)]
    hw: PathBuf,
    #[arg(long)]
    workload: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    energy: Option<PathBuf>,
    /// Report destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-batch CSV destination (sweep CSV with --sweep).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Repeat the run over batch sizes, e.g. `batch=32:2048:32`.
    #[arg(long)]
    sweep: Option<String>,
    /// Concurrent sweep points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TraceFormat {
    Text,
    Binary,
}

#[derive(clap::Args, Debug)]
struct GenTraceArgs {
    #[arg(long)]
    rows: u64,
    #[arg(long)]
    count: u64,
    #[arg(long = "zipf-s")]
    zipf_s: f64,
    #[arg(long, env = "EONSIM_SEED")]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = TraceFormat::Text)]
    format: TraceFormat,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CachePolicy {
    Lru,
    Srrip,
}

#[derive(clap::Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, value_enum)]
    policy: CachePolicy,
    /// Cache capacity in bytes.
    #[arg(long)]
    capacity: u64,
    #[arg(long)]
    assoc: u64,
    /// Line size in bytes; also the request granularity.
    #[arg(long)]
    line: u64,
    #[arg(long, default_value_t = 2)]
    rrpv_bits: u32,
    /// Vector dimension used to turn indices into addresses.
    #[arg(long, default_value_t = 128)]
    dim: u64,
    #[arg(long, default_value_t = 4)]
    dtype_bytes: u64,
    /// Write the off-chip request stream (as line numbers) in binary trace format.
    #[arg(long)]
    dump_offchip: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct ReportArgs {
    /// A report written by `run`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

enum Failure {
    User(String),
    Internal(String),
    Mismatch(String),
}

impl Failure {
    fn at(path: &Path, err: impl std::fmt::Display) -> Self {
        Failure::User(format!("{}: {err}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            Failure::User(_) => 1,
            Failure::Internal(_) => 2,
            Failure::Mismatch(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::User(m) | Failure::Internal(m) | Failure::Mismatch(m) => m,
        }
    }
}

impl From<SimError> for Failure {
    fn from(err: SimError) -> Self {
        match err {
            SimError::Invariant(_) => Failure::Internal(err.to_string()),
            other => Failure::User(other.to_string()),
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::at(path, e))
}

/// Writes via a temporary file in the destination directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::at(path, e))?;
    tmp.write_all(bytes).map_err(|e| Failure::at(path, e))?;
    tmp.persist(path).map_err(|e| Failure::at(path, e.error))?;
    Ok(())
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(path) => write_atomic(path, bytes),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::User(format!("stdout: {e}"))),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let hw = parse_hardware_config(&read_text(&args.hw)?).map_err(|e| Failure::at(&args.hw, e))?;
    let wl = parse_workload_config(&read_text(&args.workload)?)
        .map_err(|e| Failure::at(&args.workload, e))?;
    let energy = match &args.energy {
        Some(path) => {
            Some(parse_energy_table(&read_text(path)?).map_err(|e| Failure::at(path, e))?)
        }
        None => None,
    };
    let rows = wl.embedding_layers().next().map(|l| l.rows_per_table);
    let mut trace = load_trace(&args.trace, rows).map_err(|e| Failure::at(&args.trace, e))?;
    if trace.seed.is_none() {
        trace.seed = env_seed()?;
    }

    if let Some(spec) = &args.sweep {
        let sweep: BatchSweep = spec
            .parse()
            .map_err(|e| Failure::User(format!("--sweep: {e}")))?;
        let rows = run_batch_sweep(&hw, &wl, &trace, energy.as_ref(), sweep, args.jobs)?;
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).map_err(|e| Failure::Internal(e.to_string()))?;
        return emit(args.csv.as_deref(), &buf);
    }

    let report = run_simulation(&hw, &wl, &trace, energy.as_ref())?;
    if let Some(csv_path) = &args.csv {
        let mut buf = Vec::new();
        report
            .write_csv(&mut buf)
            .map_err(|e| Failure::Internal(e.to_string()))?;
        write_atomic(csv_path, &buf)?;
    }
    emit(args.out.as_deref(), report.to_json().as_bytes())
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var("EONSIM_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::User(format!("EONSIM_SEED: `{v}` is not a 64-bit integer"))),
        Err(_) => Ok(None),
    }
}

fn cmd_gen_trace(args: GenTraceArgs) -> Result<(), Failure> {
    let trace = gen_zipfian_trace(args.rows, args.count, args.zipf_s, args.seed)
        .map_err(|e| Failure::User(format!("gen-trace: {e}")))?;
    let mut buf = Vec::new();
    match args.format {
        TraceFormat::Text => trace.write_text(&mut buf),
        TraceFormat::Binary => trace.write_binary(&mut buf),
    }
    .map_err(|e| Failure::at(&args.out, e))?;
    write_atomic(&args.out, &buf)
}

fn cmd_validate_cache(args: ValidateArgs) -> Result<(), Failure> {
    let trace = load_trace(&args.trace, None).map_err(|e| Failure::at(&args.trace, e))?;
    let policy = match args.policy {
        CachePolicy::Lru => PolicyConfig::lru(args.assoc, args.line),
        CachePolicy::Srrip => PolicyConfig::srrip(args.assoc, args.line, args.rrpv_bits),
    };
    if args.line == 0 || !args.line.is_power_of_two() {
        return Err(Failure::User(format!(
            "--line must be a positive power of two, got {}",
            args.line
        )));
    }
    if args.dim == 0 || args.dtype_bytes == 0 {
        return Err(Failure::User(
            "--dim and --dtype-bytes must be positive".into(),
        ));
    }
    let level = MemLevelConfig {
        capacity_bytes: args.capacity,
        latency_cycles: 0,
        bandwidth_bytes_per_cycle: 1.0,
        granularity_bytes: args.line,
    };
    policy
        .cache_geometry(&level)
        .map_err(|e| Failure::User(e.to_string()))?;

    // Every index is one lookup in a single table.
    let layer = EmbeddingLayer {
        num_tables: 1,
        rows_per_table: trace.rows,
        dim: args.dim,
        lookups_per_sample: 1,
        reduce: Reduce::Sum,
    };
    let lookups = trace.indices.iter().map(|&index| Lookup {
        batch: 0,
        sample: 0,
        table: 0,
        index,
    });
    let accesses = translate_lookups(
        lookups,
        &layer,
        args.dtype_bytes,
        args.line,
        TablePlacement::default(),
    )
    .map_err(|e| Failure::at(&args.trace, e))?;

    let fast =
        hit_sequence(&accesses, &policy, &level, None).map_err(|e| Failure::User(e.to_string()))?;
    let reference =
        ref_cache_outcomes(&accesses, &policy, &level).map_err(|e| Failure::User(e.to_string()))?;
    let count = |v: &[bool]| {
        let hits = v.iter().filter(|&&h| h).count();
        (hits, v.len() - hits)
    };
    let (fh, fm) = count(&fast);
    let (rh, rm) = count(&reference);
    println!("simulate_onchip hits={fh} misses={fm}");
    println!("reference       hits={rh} misses={rm}");

    if let Some(path) = &args.dump_offchip {
        let lines: Vec<u64> = accesses
            .iter()
            .zip(&fast)
            .filter(|(_, &hit)| !hit)
            .map(|(a, _)| a.address / args.line)
            .collect();
        let span = trace.rows * layer.vector_bytes(args.dtype_bytes);
        let rows = span.div_ceil(args.line).max(1);
        let indices = lines
            .into_iter()
            .map(|l| {
                u32::try_from(l)
                    .map_err(|_| Failure::User("off-chip line number exceeds 32 bits".into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let dump = IndexTrace::new(indices, rows).map_err(|e| Failure::Internal(e.to_string()))?;
        let mut buf = Vec::new();
        dump.write_binary(&mut buf)
            .map_err(|e| Failure::at(path, e))?;
        write_atomic(path, &buf)?;
    }

    if let Some(first) = fast.iter().zip(&reference).position(|(a, b)| a != b) {
        return Err(Failure::Mismatch(format!(
            "models diverge at access {first}"
        )));
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let report =
        SimReport::from_json(&read_text(&args.input)?).map_err(|e| Failure::at(&args.input, e))?;
    print!("{}", report.summary());
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        report
            .write_csv(&mut buf)
            .map_err(|e| Failure::Internal(e.to_string()))?;
        write_atomic(path, &buf)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::GenTrace(args) => cmd_gen_trace(args),
        Command::ValidateCache(args) => cmd_validate_cache(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("npusim: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
