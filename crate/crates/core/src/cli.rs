//! The `corekit` command-line driver.
//!
//! ```text
//! corekit construct --input x.csv --m 1000 --method lwcs --seed 7 --output c.csv
//! corekit solve --input c.csv --k 10 --output centers.csv
//! corekit bench --input x.csv --k 100 --m 1000,2000,5000 --methods uniform,lwcs,cs --repeats 50
//! corekit distributed-sim --input x.csv --partitions 8 --strategy round_robin --m 1000
//! corekit stat-experiment --generator contaminated --n 100000 --m 1000 --k 3
//! corekit check --input x.csv --coreset c.csv --probes 200
//! ```
//!
//! `--config FILE` reads `key=value` lines named like the flags (`m=1000`,
//! `seeding_only=true`); flags given on the command line win. A `command=`
//! line supplies the subcommand when none is given. JSON outputs carry
//! `"schema": "v1"` and keep wall-clock measurements under `timing`.
//!
//! Exit status: 0 on success, 2 for configuration errors, 1 for runtime
//! errors.

use std::ffi::{OsStr, OsString};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::distributed::{partition_dataset, run_protocol, PartitionStrategy};
use crate::divergence::{Divergence, DivergenceConfig, DivergenceKind};
use crate::error::{Error, Result};
use crate::evaluation::{
    benchmark, erm_experiment, format_table, write_results_csv, BenchMethod, BenchmarkConfig,
    ErmConfig, GeneratorSpec, ProbeConfig, ProbeSet,
};
use crate::model::{load_dataset, CenterSet, Coreset, Dataset, PointSet};
use crate::sampling::{
    is_coreset_file, load_coreset, write_coreset, CoresetHeader, CoresetMethod, SamplerConfig,
};
use crate::solver::{solve_kmeans, SolveConfig};

pub const SCHEMA: &str = "v1";
pub const THREADS_ENV: &str = "COREKIT_THREADS";

const COMMANDS: [&str; 6] = [
    "construct",
    "solve",
    "bench",
    "distributed-sim",
    "stat-experiment",
    "check",
];

#[derive(Debug, Parser)]
#[command(
    name = "corekit",
    version,
    about = "Lightweight coresets for k-means",
    args_override_self = true
)]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    /// File of key=value lines with the same names as the flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a coreset and write it as CSV.
    Construct(ConstructArgs),
    /// Cluster a dataset or coreset; prints a JSON record.
    Solve(SolveArgs),
    /// Relative error and speedup of summaries against the full data.
    Bench(BenchArgs),
    /// Build a lightweight coreset with the two-round partitioned protocol.
    DistributedSim(DistributedArgs),
    /// Compare coreset and uniform estimates of the expected cost under a generator.
    StatExperiment(StatArgs),
    /// Probe the coreset property of a coreset file against its dataset.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct DivergenceArgs {
    /// squared_euclidean, squared_mahalanobis, generalized_kl or itakura_saito.
    #[arg(long, value_name = "KIND")]
    pub divergence: Option<DivergenceKind>,

    /// Row-major matrix: A for Mahalanobis, the companion A for KL and IS.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        value_name = "A11,A12,..."
    )]
    pub matrix: Option<Vec<f64>>,

    /// Domain box for KL and IS.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        value_name = "LOWER,UPPER"
    )]
    pub domain: Option<Vec<f64>>,

    /// Similarity constant overriding the derived one.
    #[arg(long, value_name = "MU")]
    pub mu_sim: Option<f64>,
}

impl DivergenceArgs {
    pub fn build(&self, dim: usize) -> Result<Divergence> {
        let domain = match self.domain.as_deref() {
            None => None,
            Some([lo, hi]) => Some((*lo, *hi)),
            Some(other) => {
                return Err(Error::Config(format!(
                    "--domain takes two values, got {}",
                    other.len()
                )));
            }
        };
        DivergenceConfig {
            kind: self.divergence,
            matrix: self.matrix.clone(),
            domain,
            mu_sim: self.mu_sim,
        }
        .build(dim)
    }
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// Dataset CSV: one point per row, no header.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of sampled points.
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value = "lwcs", value_name = "uniform|lwcs|cs")]
    pub method: CoresetMethod,
    /// Cluster count used by the cs bicriteria seeding.
    #[arg(long)]
    pub k: Option<usize>,
    /// Base seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Collapse identical sampled points into one weighted row.
    #[arg(long)]
    pub merge_duplicates: bool,
    /// Coreset CSV path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub divergence: DivergenceArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Dataset CSV or coreset CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of centers.
    #[arg(long)]
    pub k: usize,
    /// Base seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent seedings; the cheapest result is kept.
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Lloyd step limit.
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Stop when a Lloyd step improves the cost by less than this fraction.
    #[arg(long, default_value_t = 1e-4)]
    pub rel_tol: f64,
    /// Stop after k-means++ seeding.
    #[arg(long)]
    pub seeding_only: bool,
    /// Centers CSV path.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON record path; stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub divergence: DivergenceArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Dataset CSV: one point per row, no header.
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated center counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// Comma-separated summary sizes.
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    /// Comma-separated subset of uniform, lwcs, cs, full.
    #[arg(long, value_delimiter = ',', default_value = "uniform,lwcs,cs,full")]
    pub methods: Vec<BenchMethod>,
    /// Seeds per cell.
    #[arg(long, default_value_t = 50)]
    pub repeats: usize,
    /// Base seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent seedings; the cheapest result is kept.
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Lloyd step limit.
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Stop when a Lloyd step improves the cost by less than this fraction.
    #[arg(long, default_value_t = 1e-4)]
    pub rel_tol: f64,
    /// Stop after k-means++ seeding.
    #[arg(long)]
    pub seeding_only: bool,
    /// JSON results path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Tidy per-run CSV path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Print the summary table to stderr.
    #[arg(long)]
    pub table: bool,
    #[command(flatten)]
    pub divergence: DivergenceArgs,
}

#[derive(Debug, Args)]
pub struct DistributedArgs {
    /// Dataset CSV: one point per row, no header.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of simulated machines.
    #[arg(long)]
    pub partitions: usize,
    /// How rows are dealt to machines.
    #[arg(
        long,
        default_value = "round_robin",
        value_name = "round_robin|contiguous"
    )]
    pub strategy: PartitionStrategy,
    /// Number of sampled points.
    #[arg(long)]
    pub m: usize,
    /// Base seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Coreset CSV path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON path for protocol statistics.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub divergence: DivergenceArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GeneratorKind {
    Gaussian,
    Contaminated,
    PointMass,
}

#[derive(Debug, Args)]
pub struct StatArgs {
    /// Data-generating distribution.
    #[arg(long, value_enum, default_value = "contaminated")]
    pub generator: GeneratorKind,
    /// Dimension of the generated points.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Contaminated mass.
    #[arg(long, default_value_t = 0.01)]
    pub fraction: f64,
    /// Contamination distance.
    #[arg(long, default_value_t = 100.0)]
    pub distance: f64,
    /// Number of contamination clusters.
    #[arg(long, default_value_t = 1)]
    pub clusters: usize,
    /// Pareto exponent of the contamination radius.
    #[arg(long)]
    pub tail_exponent: Option<f64>,
    /// Sample size drawn from the generator.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    /// Number of sampled points.
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    /// Number of centers.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Base seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Size of the independent sample used as ground truth.
    #[arg(long, default_value_t = 1_000_000)]
    pub truth_size: usize,
    /// Number of probe center sets.
    #[arg(long, default_value_t = 200)]
    pub probes: usize,
    /// ε used for the violation fraction.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Dataset CSV: one point per row, no header.
    #[arg(long)]
    pub input: PathBuf,
    /// Coreset CSV as written by construct.
    #[arg(long)]
    pub coreset: PathBuf,
    /// Number of probe center sets.
    #[arg(long, default_value_t = 200)]
    pub probes: usize,
    /// Centers per probe.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Base seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub divergence: DivergenceArgs,
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => 2,
        _ => 1,
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the exit status. Errors are reported on stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match apply_config_file(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("corekit: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("corekit: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command inside a pool of the requested size.
pub fn execute(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
    pool.install(|| match cli.command {
        Command::Construct(a) => construct(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::DistributedSim(a) => distributed_sim(a),
        Command::StatExperiment(a) => stat_experiment(a),
        Command::Check(a) => check(a),
    })
}

/// Reads `key=value` lines into `--key=value` arguments.
pub fn parse_config_file(path: &Path) -> Result<(Option<String>, Vec<OsString>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    let mut command = None;
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                i + 1
            ))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::Config(format!(
                "{}:{}: empty key",
                path.display(),
                i + 1
            )));
        }
        match (key.as_str(), value) {
            ("command", v) => command = Some(v.to_string()),
            ("config", _) => {
                return Err(Error::Config(format!(
                    "{}:{}: config files do not nest",
                    path.display(),
                    i + 1
                )));
            }
            (_, "true") => args.push(format!("--{key}").into()),
            (_, "false") => {}
            (_, v) => args.push(format!("--{key}={v}").into()),
        }
    }
    Ok((command, args))
}

/// Splices config-file arguments in right after the subcommand, so that any
/// flag repeated on the command line overrides them.
fn apply_config_file(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    let mut iter = argv.iter().enumerate().skip(1);
    while let Some((_, a)) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            path = iter.next().map(|(_, p)| PathBuf::from(p));
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let (command, extra) = parse_config_file(&path)?;
    let position = argv
        .iter()
        .skip(1)
        .position(|a| COMMANDS.iter().any(|c| OsStr::new(c) == a))
        .map(|i| i + 1);
    let mut out = Vec::with_capacity(argv.len() + extra.len() + 1);
    match (position, command) {
        (Some(p), _) => {
            out.extend_from_slice(&argv[..=p]);
            out.extend(extra);
            out.extend_from_slice(&argv[p + 1..]);
        }
        (None, Some(c)) => {
            out.push(argv[0].clone());
            out.push(c.into());
            out.extend(extra);
            out.extend_from_slice(&argv[1..]);
        }
        (None, None) => return Ok(argv),
    }
    Ok(out)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| {
            Error::Io {
                path: p.to_path_buf(),
                source,
            }
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_error(path: Option<&Path>) -> impl Fn(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    }
}

fn emit_json(path: Option<&Path>, value: &Value) -> Result<()> {
    let mut out = open_output(path)?;
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    writeln!(out, "{text}")
        .and_then(|_| out.flush())
        .map_err(io_error(path))
}

/// `value` as a JSON object with the schema tag in front.
fn versioned<T: Serialize>(value: &T) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("schema".into(), json!(SCHEMA));
    match serde_json::to_value(value).expect("reports serialize") {
        Value::Object(fields) => obj.extend(fields),
        other => {
            obj.insert("value".into(), other);
        }
    }
    Value::Object(obj)
}

fn write_centers(path: &Path, centers: &CenterSet) -> Result<()> {
    let mut out = open_output(Some(path))?;
    let mut body = String::new();
    for c in centers.iter() {
        let row: Vec<String> = c.iter().map(f64::to_string).collect();
        body.push_str(&row.join(","));
        body.push('\n');
    }
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(io_error(Some(path)))
}

fn construct(a: ConstructArgs) -> Result<()> {
    let x = load_dataset(&a.input)?;
    let div = a.divergence.build(x.dim())?;
    let k = match (a.method, a.k) {
        (CoresetMethod::Cs, None) => return Err(Error::Config("--method cs requires --k".into())),
        (_, k) => k.unwrap_or(1),
    };
    let cfg = SamplerConfig::new(a.m, a.seed);
    let mut c = a.method.construct(&x, &cfg, k, &div)?;
    if a.merge_duplicates {
        c = c.merge_duplicates();
    }
    let header = CoresetHeader {
        n: x.n(),
        m: a.m,
        seed: a.seed,
    };
    let path = a.output.as_deref();
    let mut out = open_output(path)?;
    write_coreset(&mut out, &c, &header)
        .and_then(|_| out.flush())
        .map_err(io_error(path))
}

/// A dataset file, or a coreset file recognized by its header line.
enum Input {
    Data(Dataset),
    Summary(Coreset),
}

impl Input {
    fn load(path: &Path) -> Result<Self> {
        if is_coreset_file(path)? {
            Ok(Input::Summary(load_coreset(path)?.1))
        } else {
            Ok(Input::Data(load_dataset(path)?))
        }
    }
}

fn solve(a: SolveArgs) -> Result<()> {
    let input = Input::load(&a.input)?;
    let cfg = SolveConfig {
        k: a.k,
        seed: a.seed,
        max_iters: a.max_iters,
        rel_tol: a.rel_tol,
        restarts: a.restarts,
        seeding_only: a.seeding_only,
    };
    let start = Instant::now();
    let (sol, kind, points) = match &input {
        Input::Data(x) => (
            solve_kmeans(x, &cfg, &a.divergence.build(x.dim())?)?,
            "dataset",
            x.n(),
        ),
        Input::Summary(c) => (
            solve_kmeans(c, &cfg, &a.divergence.build(c.dim())?)?,
            "coreset",
            c.len(),
        ),
    };
    let seconds = start.elapsed().as_secs_f64();
    if let Some(p) = &a.output {
        write_centers(p, &sol.centers)?;
    }
    let centers: Vec<&[f64]> = sol.centers.iter().collect();
    let record = json!({
        "schema": SCHEMA,
        "input_kind": kind,
        "points": points,
        "k": a.k,
        "seed": a.seed,
        "cost": sol.cost,
        "iters": sol.iters,
        "restart": sol.restart,
        "centers": centers,
        "timing": { "seconds": seconds },
    });
    emit_json(a.report.as_deref(), &record)
}

fn bench(a: BenchArgs) -> Result<()> {
    let x = load_dataset(&a.input)?;
    let div = a.divergence.build(x.dim())?;
    let mut cfg = BenchmarkConfig::new(a.methods, a.m, a.k, a.repeats, a.seed);
    cfg.max_iters = a.max_iters;
    cfg.rel_tol = a.rel_tol;
    cfg.restarts = a.restarts;
    cfg.seeding_only = a.seeding_only;
    let report = benchmark(&x, &cfg, &div)?;
    if a.table {
        eprint!("{}", format_table(&report));
    }
    if let Some(p) = &a.csv {
        let file = File::create(p).map_err(|source| Error::Io {
            path: p.clone(),
            source,
        })?;
        write_results_csv(BufWriter::new(file), &report.results)?;
    }
    emit_json(
        a.output.as_deref(),
        &serde_json::to_value(&report).expect("reports serialize"),
    )
}

fn distributed_sim(a: DistributedArgs) -> Result<()> {
    let x = load_dataset(&a.input)?;
    let div = a.divergence.build(x.dim())?;
    let parts = partition_dataset(&x, a.partitions, a.strategy)?;
    let run = run_protocol(&parts, a.m, a.seed, &div)?;
    let header = CoresetHeader {
        n: x.n(),
        m: a.m,
        seed: a.seed,
    };
    let path = a.output.as_deref();
    let mut out = open_output(path)?;
    write_coreset(&mut out, &run.coreset, &header)
        .and_then(|_| out.flush())
        .map_err(io_error(path))?;
    if let Some(p) = &a.report {
        let record = json!({
            "schema": SCHEMA,
            "n": x.n(),
            "m": a.m,
            "seed": a.seed,
            "partitions": a.partitions,
            "strategy": a.strategy.to_string(),
            "mean": run.stats.mean,
            "total_central_cost": run.stats.total_central_cost,
            "per_partition_count": run.stats.per_partition_count,
            "per_partition_central_cost": run.stats.per_partition_central_cost,
            "uniform_counts": run.allocation.uniform_counts,
            "nonuniform_counts": run.allocation.nonuniform_counts,
            "worker_passes": run.worker_passes,
            "messages": run.messages,
        });
        emit_json(Some(p), &record)?;
    }
    Ok(())
}

fn stat_experiment(a: StatArgs) -> Result<()> {
    let generator = match a.generator {
        GeneratorKind::Gaussian => GeneratorSpec::standard_gaussian(a.dim),
        GeneratorKind::PointMass => GeneratorSpec::point_mass(vec![0.0; a.dim]),
        GeneratorKind::Contaminated => GeneratorSpec::HeavyTailContaminated {
            dim: a.dim,
            fraction: a.fraction,
            distance: a.distance,
            clusters: a.clusters,
            tail_exponent: a.tail_exponent,
        },
    };
    let cfg = ErmConfig {
        generator,
        n: a.n,
        m: a.m,
        k: a.k,
        seed: a.seed,
        truth_size: a.truth_size,
        probes: a.probes,
        target_epsilon: a.epsilon,
    };
    let report = erm_experiment(&cfg)?;
    emit_json(a.output.as_deref(), &versioned(&report))
}

fn check(a: CheckArgs) -> Result<()> {
    let x = load_dataset(&a.input)?;
    let (_, c) = load_coreset(&a.coreset)?;
    if c.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: c.dim(),
        });
    }
    let div = a.divergence.build(x.dim())?;
    let set = ProbeSet::generate(&x, &ProbeConfig::new(a.k, a.seed).count(a.probes), &div)?;
    let report = set.evaluate(&c, &div)?;
    let mut value = versioned(&report);
    value["central_cost"] = json!(set.central_cost);
    value["coreset_weight"] = json!(c.total_weight());
    emit_json(a.output.as_deref(), &value)
}
