//! `imbal`: information-imbalance analysis from the command line.
//!
//! Every subcommand reads a CSV (or synthesizes one), prints a summary on
//! stdout as a table or as JSON lines, and optionally writes the JSON lines
//! to `--out` and a plane plot to `--svg`. Exit codes: 0 on success, 1 on a
//! data error, 2 on a usage error.

pub mod columns;
pub mod svg;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use imbal_core::dataset::{load_csv, synthesize, write_csv};
use imbal_core::imbalance::{conditional_histogram, Subsample};
use imbal_core::select::{default_scale_grid, log_grid, random_baseline, DEFAULT_BUDGET};
use imbal_core::{
    classify, exhaustive_best_subsets, greedy_forward, imbalance_pair, lag_scan, native_order, scale_optimize,
    symmetric_imbalance, Dataset, DistanceSpec, ImbalanceEstimate, ImbalanceOptions, LagSpec, ObjectiveMode,
    PlanePoint, SelectionObjective, SelectionTrace, SynthKind, SynthSpec, Thresholds,
};

use columns::{parse_columns, parse_lags, parse_pairs};
use svg::{emit_svg, SvgError};

/// Environment variable holding the default worker-thread cap.
pub const THREADS_ENV: &str = "IMBAL_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] imbal_core::Error),
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Svg(#[from] SvgError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    fn report(&self) {
        match self {
            CliError::Usage(msg) => {
                eprintln!("error: {msg}");
                eprintln!("  see `imbal --help`");
            }
            CliError::Data(e) => {
                eprintln!("error [{}]: {e}", e.module());
                if let Some(hint) = e.hint() {
                    eprintln!("  hint: {hint}");
                }
            }
            CliError::Write { .. } => eprintln!("error [io]: {self}"),
            CliError::Svg(e) => eprintln!("error [svg]: {e}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "imbal",
    version,
    about = "Rank the information content of distance measures",
    after_help = "Environment:\n  IMBAL_THREADS  worker-thread cap used when --threads is not given\n  RUST_LOG       log filter (default: warn)"
)]
struct Cli {
    /// Seed for synthesis, random baselines and subsampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on worker threads. Results do not depend on it.
    #[arg(long, global = true, env = THREADS_ENV, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Stdout format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Forward,
    Symmetric,
}

impl From<Mode> for ObjectiveMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Forward => ObjectiveMode::Forward,
            Mode::Symmetric => ObjectiveMode::Symmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Exhaustive,
    Greedy,
    Random,
    Native,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Non-numeric column holding group labels.
    #[arg(long)]
    group_col: Option<String>,
    /// Integer time-index column.
    #[arg(long)]
    time_col: Option<String>,
    /// Append a ratio column, `NAME=NUM/DEN`; rows with a zero denominator are dropped.
    #[arg(long = "ratio", value_name = "NAME=NUM/DEN")]
    ratios: Vec<String>,
    /// Standardize these columns (never done implicitly).
    #[arg(long, value_name = "COLUMNS")]
    standardize: Option<String>,
}

#[derive(Args, Debug)]
struct EstimatorArgs {
    /// Neighbors per point in the conditioning space; values above 1 are an extension.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Average over this many random conditioning points instead of all of them.
    #[arg(long)]
    subsample: Option<usize>,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    /// Plane classification: below this both imbalances count as low.
    #[arg(long, default_value_t = 0.25)]
    tau: f64,
    /// Plane classification: minimum difference for containment.
    #[arg(long, default_value_t = 0.25)]
    gap: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded synthetic dataset as CSV.
    Synth {
        /// One of gauss-aniso-3d, gauss-iso-4d, spiral, sine.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Sigmas for gauss-aniso-3d, noise for spiral and sine.
        #[arg(long, value_delimiter = ',')]
        param: Vec<f64>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Information imbalance in both directions between two spaces.
    Imbalance {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        space_a: String,
        #[arg(long)]
        space_b: String,
        #[command(flatten)]
        est: EstimatorArgs,
        #[command(flatten)]
        thr: ThresholdArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Place space pairs on the imbalance plane.
    Plane {
        #[command(flatten)]
        data: DataArgs,
        /// Pairs of spaces: `A|B;C|D`.
        #[arg(long)]
        pairs: String,
        #[command(flatten)]
        est: EstimatorArgs,
        #[command(flatten)]
        thr: ThresholdArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Histogram of B-ranks of the A-nearest neighbors.
    Hist {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        space_a: String,
        #[arg(long)]
        space_b: String,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[command(flatten)]
        est: EstimatorArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search feature subsets that best reproduce a target space.
    Select {
        #[command(flatten)]
        data: DataArgs,
        /// Candidate features.
        #[arg(long)]
        pool: String,
        /// Target space.
        #[arg(long)]
        target: String,
        #[arg(long, value_enum, default_value_t = StrategyArg::Greedy)]
        strategy: StrategyArg,
        #[arg(long, value_enum, default_value_t = Mode::Forward)]
        mode: Mode,
        /// Largest subset size.
        #[arg(long)]
        d_max: usize,
        /// Random subsets per size (random strategy).
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Cap on subset evaluations (exhaustive strategy).
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Choose relative feature scales against an anchor by grid search.
    Scale {
        #[command(flatten)]
        data: DataArgs,
        /// Features whose scales are searched.
        #[arg(long)]
        features: String,
        /// Feature whose scale stays 1.
        #[arg(long)]
        anchor: String,
        #[arg(long)]
        target: String,
        #[arg(long, value_enum, default_value_t = Mode::Forward)]
        mode: Mode,
        #[arg(long, default_value_t = 1e-3)]
        grid_lo: f64,
        #[arg(long, default_value_t = 1e3)]
        grid_hi: f64,
        #[arg(long, default_value_t = 61)]
        grid_points: usize,
        /// Coordinate-descent passes.
        #[arg(long, default_value_t = 1)]
        passes: usize,
        /// Also emit the objective at every grid value.
        #[arg(long)]
        profiles: bool,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan imbalance between sources at t and targets at t+lag.
    Lag {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: String,
        /// Lags, e.g. `-3:3` or `-1,1,2`.
        #[arg(long, allow_hyphen_values = true)]
        lags: String,
        #[command(flatten)]
        est: EstimatorArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parse `args` (program name first), execute, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    let result = match cli.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t as usize).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(CliError::Usage(format!("cannot start {t} worker threads: {e}"))),
        },
        None => execute(&cli),
    };
    match result.and_then(|out| out.emit(cli.format)) {
        Ok(()) => 0,
        Err(e) => {
            e.report();
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let mut builder = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"));
    match verbose {
        0 => {}
        1 => {
            builder.filter_level(log::LevelFilter::Info);
        }
        _ => {
            builder.filter_level(log::LevelFilter::Debug);
        }
    }
    let _ = builder.format_timestamp(None).try_init();
}

/// Everything a subcommand produces, written only after it succeeded.
#[derive(Default)]
struct Output {
    records: Vec<String>,
    table: String,
    jsonl_path: Option<PathBuf>,
    files: Vec<(PathBuf, String)>,
    /// Raw stdout payload that replaces the table and the records.
    raw_stdout: Option<String>,
}

impl Output {
    fn record<T: Serialize>(&mut self, r: &T) {
        self.records.push(serde_json::to_string(r).expect("records serialize"));
    }

    fn emit(self, format: Format) -> Result<(), CliError> {
        for (path, body) in &self.files {
            write_file(path, body)?;
        }
        if let Some(path) = &self.jsonl_path {
            write_file(path, &self.jsonl())?;
        }
        let stdout = match (&self.raw_stdout, format) {
            (Some(raw), _) => raw.clone(),
            (None, Format::Json) => self.jsonl(),
            (None, Format::Table) => self.table.clone(),
        };
        let mut lock = io::stdout().lock();
        lock.write_all(stdout.as_bytes())
            .and_then(|_| lock.flush())
            .map_err(|source| CliError::Write { path: "<stdout>".into(), source })
    }

    fn jsonl(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

fn same_path(a: &Path, b: &Path) -> bool {
    a == b || matches!((a.canonicalize(), b.canonicalize()), (Ok(x), Ok(y)) if x == y)
}

/// Reject output paths that collide with each other or with the input.
fn check_outputs(input: Option<&Path>, outputs: &[Option<&PathBuf>]) -> Result<(), CliError> {
    let outs: Vec<&PathBuf> = outputs.iter().flatten().copied().collect();
    for (i, a) in outs.iter().enumerate() {
        if input.is_some_and(|inp| same_path(a, inp)) {
            return Err(CliError::Usage(format!("output {} would overwrite the input", a.display())));
        }
        if outs[..i].iter().any(|b| same_path(a, b)) {
            return Err(CliError::Usage(format!("conflicting outputs: {} is given twice", a.display())));
        }
    }
    Ok(())
}

fn load(args: &DataArgs) -> Result<Dataset, CliError> {
    let loaded = load_csv(&args.data, args.group_col.as_deref(), args.time_col.as_deref())?;
    if loaded.dropped > 0 {
        log::warn!("dropped {} incomplete rows from {}", loaded.dropped, args.data.display());
    }
    let mut ds = loaded.dataset;
    for ratio in &args.ratios {
        let parsed = ratio.split_once('=').and_then(|(name, expr)| {
            let (num, den) = expr.split_once('/')?;
            Some((name.trim(), num.trim(), den.trim()))
        });
        let Some((name, num, den)) = parsed else {
            return Err(CliError::Usage(format!("ratio {ratio:?} is not NAME=NUM/DEN")));
        };
        let derived = ds.derive_ratio(num, den, name)?;
        if derived.dropped > 0 {
            log::warn!("ratio {name}: dropped {} rows with a zero denominator", derived.dropped);
        }
        ds = derived.dataset;
    }
    if let Some(sel) = &args.standardize {
        let cols = parse_columns(sel, ds.column_names())?;
        ds = ds.standardize(&cols)?;
    }
    Ok(ds)
}

fn estimator(est: &EstimatorArgs, seed: u64) -> ImbalanceOptions {
    ImbalanceOptions { k: est.k, subsample: est.subsample.map(|points| Subsample { points, seed }) }
}

fn execute(cli: &Cli) -> Result<Output, CliError> {
    let seed = cli.seed;
    match &cli.command {
        Command::Synth { kind, n, param, out } => cmd_synth(kind, *n, param, seed, out.as_ref()),
        Command::Imbalance { data, space_a, space_b, est, thr, out } => {
            check_outputs(Some(&data.data), &[out.as_ref()])?;
            let ds = load(data)?;
            let rec = imbalance_record(&ds, space_a, space_b, &estimator(est, seed), thresholds(thr)?)?;
            let mut o = Output { jsonl_path: out.clone(), ..Default::default() };
            o.table = rec.table();
            o.record(&rec);
            Ok(o)
        }
        Command::Plane { data, pairs, est, thr, out, svg } => {
            check_outputs(Some(&data.data), &[out.as_ref(), svg.as_ref()])?;
            let pairs = parse_pairs(pairs)?;
            let ds = load(data)?;
            let (opts, th) = (estimator(est, seed), thresholds(thr)?);
            let mut o = Output { jsonl_path: out.clone(), ..Default::default() };
            let mut points = Vec::new();
            for (a, b) in &pairs {
                let rec = imbalance_record(&ds, a, b, &opts, th)?;
                o.table.push_str(&rec.table());
                o.table.push('\n');
                points.push(PlanePoint::new(rec.delta_ab, rec.delta_ba, format!("{a} | {b}")));
                o.record(&rec);
            }
            if let Some(path) = svg {
                o.files.push((path.clone(), emit_svg(&points)?));
            }
            Ok(o)
        }
        Command::Hist { data, space_a, space_b, bins, est, out } => {
            check_outputs(Some(&data.data), &[out.as_ref()])?;
            let ds = load(data)?;
            cmd_hist(&ds, space_a, space_b, *bins, &estimator(est, seed), out.clone())
        }
        Command::Select { data, pool, target, strategy, mode, d_max, trials, budget, k, out, svg } => {
            check_outputs(Some(&data.data), &[out.as_ref(), svg.as_ref()])?;
            let ds = load(data)?;
            let pool = parse_columns(pool, ds.column_names())?;
            let target = parse_columns(target, ds.column_names())?;
            let obj =
                SelectionObjective { target: DistanceSpec::from_names(&ds, &target)?, mode: (*mode).into(), k: *k };
            let mut o = Output { jsonl_path: out.clone(), ..Default::default() };
            let points = match strategy {
                StrategyArg::Random => random_records(&ds, &pool, &obj, *d_max, *trials, seed, &mut o)?,
                _ => {
                    let trace = match strategy {
                        StrategyArg::Exhaustive => exhaustive_best_subsets(&ds, &pool, &obj, *d_max, *budget)?,
                        StrategyArg::Greedy => greedy_forward(&ds, &pool, &obj, *d_max)?,
                        _ => native_order(&ds, &pool, &obj, *d_max)?,
                    };
                    trace_records(&trace, &mut o)
                }
            };
            if let Some(path) = svg {
                o.files.push((path.clone(), emit_svg(&points)?));
            }
            Ok(o)
        }
        Command::Scale {
            data,
            features,
            anchor,
            target,
            mode,
            grid_lo,
            grid_hi,
            grid_points,
            passes,
            profiles,
            k,
            out,
        } => {
            check_outputs(Some(&data.data), &[out.as_ref()])?;
            let ds = load(data)?;
            let features = parse_columns(features, ds.column_names())?;
            let target = parse_columns(target, ds.column_names())?;
            let obj =
                SelectionObjective { target: DistanceSpec::from_names(&ds, &target)?, mode: (*mode).into(), k: *k };
            let grid = if (*grid_lo, *grid_hi, *grid_points) == (1e-3, 1e3, 61) {
                default_scale_grid()
            } else {
                log_grid(*grid_lo, *grid_hi, *grid_points)?
            };
            let res = scale_optimize(&ds, &features, anchor, &obj, &grid, *passes)?;
            cmd_scale_output(&ds, &res, &obj, *profiles, out.clone())
        }
        Command::Lag { data, source, target, lags, est, out } => {
            check_outputs(Some(&data.data), &[out.as_ref()])?;
            let Some(time_col) = data.time_col.clone() else {
                return Err(CliError::Usage("lag needs --time-col".into()));
            };
            let lags = parse_lags(lags)?;
            let ds = load(data)?;
            let spec = LagSpec {
                group_col: data.group_col.clone(),
                time_col,
                source_cols: parse_columns(source, ds.column_names())?,
                target_cols: parse_columns(target, ds.column_names())?,
                lags,
            };
            cmd_lag(&ds, &spec, &estimator(est, seed), out.clone())
        }
    }
}

fn thresholds(thr: &ThresholdArgs) -> Result<Thresholds, CliError> {
    Ok(Thresholds::new(thr.tau, thr.gap)?)
}

fn cmd_synth(kind: &str, n: usize, param: &[f64], seed: u64, out: Option<&PathBuf>) -> Result<Output, CliError> {
    let kind = SynthKind::from_name(kind, param)?;
    let ds = synthesize(&SynthSpec { kind: kind.clone(), n, seed })?;
    let mut buf = Vec::new();
    write_csv(&ds, &mut buf)?;
    let csv = String::from_utf8(buf).expect("CSV output is UTF-8");
    let mut o = Output::default();
    match out {
        None => o.raw_stdout = Some(csv),
        Some(path) => {
            o.files.push((path.clone(), csv));
            #[derive(Serialize)]
            struct SynthRecord<'a> {
                record: &'static str,
                kind: &'static str,
                n: usize,
                seed: u64,
                columns: &'a [String],
                path: String,
            }
            let rec = SynthRecord {
                record: "synth",
                kind: kind.name(),
                n,
                seed,
                columns: ds.column_names(),
                path: path.display().to_string(),
            };
            o.table = format!(
                "wrote {} rows of {} ({}) to {}\n",
                n,
                kind.name(),
                ds.column_names().join(","),
                path.display()
            );
            o.record(&rec);
        }
    }
    Ok(o)
}

#[derive(Debug, Serialize)]
struct ImbalanceRecord {
    record: &'static str,
    space_a: Vec<String>,
    space_b: Vec<String>,
    n: usize,
    k: usize,
    k_extension: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    subsample: Option<usize>,
    delta_ab: f64,
    delta_ba: f64,
    mean_rank_ab: f64,
    mean_rank_ba: f64,
    stderr_ab: f64,
    stderr_ba: f64,
    symmetric: f64,
    class: &'static str,
    tau_low: f64,
    gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tied_pairs_ab: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tied_pairs_ba: Option<usize>,
}

impl ImbalanceRecord {
    fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "A = {}   B = {}", self.space_a.join(","), self.space_b.join(","));
        let _ = writeln!(s, "  N {}   k {}{}", self.n, self.k, if self.k_extension { " (extension)" } else { "" });
        let _ =
            writeln!(s, "  Δ(A→B) {:.4} ± {:.4}   mean rank {:.2}", self.delta_ab, self.stderr_ab, self.mean_rank_ab);
        let _ =
            writeln!(s, "  Δ(B→A) {:.4} ± {:.4}   mean rank {:.2}", self.delta_ba, self.stderr_ba, self.mean_rank_ba);
        let _ = writeln!(s, "  symmetric {:.4}", self.symmetric);
        let _ = writeln!(s, "  class {}   (tau {}, gap {})", self.class, self.tau_low, self.gap);
        if let (Some(a), Some(b)) = (self.tied_pairs_ab, self.tied_pairs_ba) {
            if a + b > 0 {
                let _ = writeln!(s, "  tied conditioning pairs {a} / {b}");
            }
        }
        s
    }
}

fn imbalance_record(
    ds: &Dataset,
    space_a: &str,
    space_b: &str,
    opts: &ImbalanceOptions,
    th: Thresholds,
) -> Result<ImbalanceRecord, CliError> {
    let a = parse_columns(space_a, ds.column_names())?;
    let b = parse_columns(space_b, ds.column_names())?;
    let (ab, ba) = imbalance_pair(ds, &DistanceSpec::from_names(ds, &a)?, &DistanceSpec::from_names(ds, &b)?, opts)?;
    let pp = PlanePoint::new(ab.delta, ba.delta, "");
    let class = classify(&pp, th).class;
    Ok(ImbalanceRecord {
        record: "imbalance",
        space_a: a,
        space_b: b,
        n: ab.n,
        k: ab.k,
        k_extension: ab.is_extension(),
        subsample: opts.subsample.map(|s| s.points),
        delta_ab: ab.delta,
        delta_ba: ba.delta,
        mean_rank_ab: ab.mean_rank,
        mean_rank_ba: ba.mean_rank,
        stderr_ab: ab.stderr,
        stderr_ba: ba.stderr,
        symmetric: symmetric_imbalance(&pp),
        class: class.as_str(),
        tau_low: th.tau_low(),
        gap: th.gap(),
        tied_pairs_ab: ab.tied_pairs,
        tied_pairs_ba: ba.tied_pairs,
    })
}

fn cmd_hist(
    ds: &Dataset,
    space_a: &str,
    space_b: &str,
    bins: usize,
    opts: &ImbalanceOptions,
    out: Option<PathBuf>,
) -> Result<Output, CliError> {
    #[derive(Serialize)]
    struct HistRecord<'a> {
        record: &'static str,
        space_a: &'a [String],
        space_b: &'a [String],
        n: usize,
        k: usize,
        k_extension: bool,
        bin: usize,
        rank_lo: f64,
        rank_hi: f64,
        count: u64,
        frequency: f64,
    }
    let a = parse_columns(space_a, ds.column_names())?;
    let b = parse_columns(space_b, ds.column_names())?;
    let h =
        conditional_histogram(ds, &DistanceSpec::from_names(ds, &a)?, &DistanceSpec::from_names(ds, &b)?, opts, bins)?;
    let mut o = Output { jsonl_path: out, ..Default::default() };
    let _ =
        writeln!(o.table, "B-ranks of A-neighbors   A = {}   B = {}   N {}   k {}", a.join(","), b.join(","), h.n, h.k);
    let peak = h.counts.iter().copied().max().unwrap_or(0).max(1);
    for bin in 0..bins {
        let rec = HistRecord {
            record: "hist",
            space_a: &a,
            space_b: &b,
            n: h.n,
            k: h.k,
            k_extension: h.k > 1,
            bin,
            rank_lo: h.edges[bin],
            rank_hi: h.edges[bin + 1],
            count: h.counts[bin],
            frequency: h.frequencies[bin],
        };
        let bar = "#".repeat((40 * rec.count / peak) as usize);
        let _ = writeln!(o.table, "  [{:>9.1}, {:>9.1})  {:.4}  {bar}", rec.rank_lo, rec.rank_hi, rec.frequency);
        o.record(&rec);
    }
    Ok(o)
}

#[derive(Serialize)]
struct SelectRecord<'a> {
    record: &'static str,
    strategy: &'static str,
    mode: ObjectiveMode,
    k: usize,
    k_extension: bool,
    d: usize,
    subset: &'a [String],
    objective: f64,
    delta_forward: f64,
    delta_backward: f64,
    evaluations: u64,
}

fn trace_records(trace: &SelectionTrace, o: &mut Output) -> Vec<PlanePoint> {
    let _ = writeln!(o.table, "{} selection ({:?} objective, k {})", trace.strategy.as_str(), trace.mode, trace.k);
    if !trace.overlap.is_empty() {
        let _ = writeln!(o.table, "  note: pool shares {} with the target", trace.overlap.join(","));
    }
    let _ = writeln!(o.table, "  {:>3}  {:>9}  {:>9}  {:>9}  subset", "d", "objective", "Δ(S→T)", "Δ(T→S)");
    let mut points = Vec::new();
    for s in &trace.steps {
        let rec = SelectRecord {
            record: "select",
            strategy: trace.strategy.as_str(),
            mode: trace.mode,
            k: trace.k,
            k_extension: trace.k > 1,
            d: s.d,
            subset: &s.subset,
            objective: s.eval.objective,
            delta_forward: s.eval.delta_forward,
            delta_backward: s.eval.delta_backward,
            evaluations: s.evaluations,
        };
        let _ = writeln!(
            o.table,
            "  {:>3}  {:>9.4}  {:>9.4}  {:>9.4}  {}",
            s.d,
            s.eval.objective,
            s.eval.delta_forward,
            s.eval.delta_backward,
            s.subset.join(",")
        );
        o.record(&rec);
        points.push(PlanePoint::new(s.eval.delta_forward, s.eval.delta_backward, format!("d={}", s.d)));
    }
    points
}

fn random_records(
    ds: &Dataset,
    pool: &[String],
    obj: &SelectionObjective,
    d_max: usize,
    trials: usize,
    seed: u64,
    o: &mut Output,
) -> Result<Vec<PlanePoint>, CliError> {
    #[derive(Serialize)]
    struct Summary {
        record: &'static str,
        mode: ObjectiveMode,
        k: usize,
        k_extension: bool,
        d: usize,
        trials: usize,
        seed: u64,
        min: f64,
        median: f64,
    }
    if d_max == 0 || d_max > pool.len() {
        return Err(CliError::Usage(format!("--d-max must be in 1..={}", pool.len())));
    }
    let _ = writeln!(o.table, "random selection ({:?} objective, k {}, {trials} trials)", obj.mode, obj.k);
    let _ = writeln!(o.table, "  {:>3}  {:>9}  {:>9}", "d", "min", "median");
    let mut points = Vec::new();
    for d in 1..=d_max {
        let d_seed = seed.wrapping_add(d as u64);
        let base = random_baseline(ds, pool, obj, d, trials, d_seed)?;
        for t in &base.trials {
            o.record(&SelectRecord {
                record: "random_trial",
                strategy: "random",
                mode: obj.mode,
                k: obj.k,
                k_extension: obj.k > 1,
                d,
                subset: &t.subset,
                objective: t.eval.objective,
                delta_forward: t.eval.delta_forward,
                delta_backward: t.eval.delta_backward,
                evaluations: 1,
            });
            points.push(PlanePoint::new(t.eval.delta_forward, t.eval.delta_backward, format!("d={d}")));
        }
        o.record(&Summary {
            record: "random_summary",
            mode: obj.mode,
            k: obj.k,
            k_extension: obj.k > 1,
            d,
            trials,
            seed: d_seed,
            min: base.min,
            median: base.median,
        });
        let _ = writeln!(o.table, "  {:>3}  {:>9.4}  {:>9.4}", d, base.min, base.median);
    }
    Ok(points)
}

fn cmd_scale_output(
    ds: &Dataset,
    res: &imbal_core::ScaleSearch,
    obj: &SelectionObjective,
    profiles: bool,
    out: Option<PathBuf>,
) -> Result<Output, CliError> {
    #[derive(Serialize)]
    struct ScaleRecord<'a> {
        record: &'static str,
        mode: ObjectiveMode,
        k: usize,
        k_extension: bool,
        n: usize,
        anchor: &'a str,
        features: &'a [String],
        scales: &'a [f64],
        objective: f64,
        delta_forward: f64,
        delta_backward: f64,
        evaluations: u64,
    }
    #[derive(Serialize)]
    struct ProfileRecord<'a> {
        record: &'static str,
        pass: usize,
        feature: &'a str,
        scale: f64,
        objective: f64,
        chosen: bool,
    }
    let mut o = Output { jsonl_path: out, ..Default::default() };
    o.record(&ScaleRecord {
        record: "scale",
        mode: obj.mode,
        k: obj.k,
        k_extension: obj.k > 1,
        n: ds.n_rows(),
        anchor: &res.anchor,
        features: &res.features,
        scales: &res.scales,
        objective: res.eval.objective,
        delta_forward: res.eval.delta_forward,
        delta_backward: res.eval.delta_backward,
        evaluations: res.evaluations,
    });
    let _ = writeln!(o.table, "scale search against anchor {} ({:?} objective)", res.anchor, obj.mode);
    for (f, s) in res.features.iter().zip(&res.scales) {
        let _ = writeln!(o.table, "  {f:<16} {s:.6}");
    }
    let _ = writeln!(
        o.table,
        "  objective {:.4}   Δ(S→T) {:.4}   Δ(T→S) {:.4}   ({} evaluations)",
        res.eval.objective, res.eval.delta_forward, res.eval.delta_backward, res.evaluations
    );
    if profiles {
        for sweep in &res.sweeps {
            for (g, v) in sweep.grid.iter().zip(&sweep.objectives) {
                o.record(&ProfileRecord {
                    record: "scale_profile",
                    pass: sweep.pass,
                    feature: &sweep.feature,
                    scale: *g,
                    objective: *v,
                    chosen: *g == sweep.chosen,
                });
            }
        }
    }
    Ok(o)
}

fn cmd_lag(ds: &Dataset, spec: &LagSpec, opts: &ImbalanceOptions, out: Option<PathBuf>) -> Result<Output, CliError> {
    #[derive(Serialize)]
    struct LagOut<'a> {
        record: &'static str,
        source: &'a [String],
        target: &'a [String],
        lag: i64,
        pairs: usize,
        status: imbal_core::LagStatus,
        k: usize,
        k_extension: bool,
        delta_forward: Option<f64>,
        delta_backward: Option<f64>,
        stderr_forward: Option<f64>,
        stderr_backward: Option<f64>,
    }
    #[derive(Serialize)]
    struct LagSummary {
        record: &'static str,
        best_forward_lag: Option<i64>,
    }
    let res = lag_scan(ds, spec, opts)?;
    let mut o = Output { jsonl_path: out, ..Default::default() };
    let _ =
        writeln!(o.table, "lag scan   source {}   target {}", spec.source_cols.join(","), spec.target_cols.join(","));
    let _ = writeln!(o.table, "  {:>5}  {:>6}  {:>9}  {:>9}", "lag", "pairs", "forward", "backward");
    let fmt = |e: Option<&ImbalanceEstimate>| e.map_or_else(|| "-".to_string(), |e| format!("{:.4}", e.delta));
    for r in &res.records {
        o.record(&LagOut {
            record: "lag",
            source: &spec.source_cols,
            target: &spec.target_cols,
            lag: r.lag,
            pairs: r.pairs,
            status: r.status,
            k: opts.k,
            k_extension: opts.k > 1,
            delta_forward: r.forward.as_ref().map(|e| e.delta),
            delta_backward: r.backward.as_ref().map(|e| e.delta),
            stderr_forward: r.forward.as_ref().map(|e| e.stderr),
            stderr_backward: r.backward.as_ref().map(|e| e.stderr),
        });
        let _ = writeln!(
            o.table,
            "  {:>+5}  {:>6}  {:>9}  {:>9}",
            r.lag,
            r.pairs,
            fmt(r.forward.as_ref()),
            fmt(r.backward.as_ref())
        );
    }
    o.record(&LagSummary { record: "lag_summary", best_forward_lag: res.best_forward_lag });
    match res.best_forward_lag {
        Some(l) => {
            let _ = writeln!(o.table, "  best forward lag {l:+}");
        }
        None => {
            let _ = writeln!(o.table, "  no lag had enough pairs");
        }
    }
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_conflicts() {
        let a = PathBuf::from("a.jsonl");
        let b = PathBuf::from("b.svg");
        assert!(check_outputs(Some(Path::new("in.csv")), &[Some(&a), Some(&b)]).is_ok());
        assert!(check_outputs(None, &[Some(&a), Some(&a)]).is_err());
        assert!(check_outputs(Some(Path::new("a.jsonl")), &[Some(&a), None]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Data(imbal_core::Error::DegenerateDistance).exit_code(), 1);
        assert_eq!(run(["imbal", "frobnicate"]), 2);
        assert_eq!(run(["imbal", "imbalance", "--bogus"]), 2);
        assert_eq!(run(["imbal", "--help"]), 0);
    }
}
