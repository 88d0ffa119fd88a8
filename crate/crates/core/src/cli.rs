//! Command-line front end.
//!
//! Every command resolves its configuration from three layers, highest
//! priority first: command-line flags, a JSON config file (`--config`), and
//! built-in defaults. The master seed falls back to `LIPSCOPE_SEED` when
//! neither flags nor file set it. The resolved configuration is embedded in a
//! metadata record at the top of every output file, so any output can be
//! regenerated from its own header.
//!
//! CSV output starts with one `# {json}` metadata line followed by a header
//! row; reals are printed in `{:.16e}` form (17 significant digits, exact
//! round trip). JSON output carries the same record under `"meta"`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::bounds::{bound_report, exact_lower_bound, exact_upper_bound, rmt_lower_bound, rmt_upper_bound};
use crate::empirics::{
    fit_gaussian, generate_dataset, norm_comparison_report, train_sgd, weight_histogram, TrainConfig,
    DEFAULT_DATASET_SIZE,
};
use crate::linalg::Matrix;
use crate::network::{Activation, Architecture, Network};
use crate::random::RngStream;
use crate::stability::{
    example_state_matrix, stability_likelihood_with_mode, CertificationMode, StabilityError, StabilitySystem,
};
use crate::trajectory::{circle_trajectory, expressiveness_correlation_with_bias};

pub const SEED_ENV: &str = "LIPSCOPE_SEED";
pub const TOOL_NAME: &str = "lipscope";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    /// 1 for usage and I/O problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

fn usage(msg: impl ToString) -> CliError {
    CliError::Usage(msg.to_string())
}

fn numeric(msg: impl ToString) -> CliError {
    CliError::Numeric(msg.to_string())
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "lipscope", version, about = "Lipschitz bounds, random-matrix estimates and stability certificates for deep networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact and closed-form Lipschitz bounds for one network.
    Bounds(BoundsArgs),
    /// Bounds over a width × depth grid, several seeds per cell.
    Sweep(SweepArgs),
    /// Likelihood that random networks keep a linear system stable.
    Stability(StabilityArgs),
    /// Output-trajectory stretch against the closed-form lower estimate.
    Trajectory(TrajectoryArgs),
    /// Train small networks and compare weight norms with Gaussian predictions.
    TrainStudy(TrainStudyArgs),
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (default: $LIPSCOPE_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (directory for train-study). Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; affects runtime only.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Omit the timestamp from the metadata record.
    #[arg(long)]
    pub reproducible: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    /// Network JSON file; takes precedence over --arch.
    #[arg(long = "net")]
    pub net_file: Option<PathBuf>,
    /// Widths "2,300,2" or shorthand "300x1" (width x hidden layers).
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long)]
    pub sigma_w: Option<f64>,
    #[arg(long)]
    pub sigma_b: Option<f64>,
    #[arg(long)]
    pub activation: Option<Activation>,
    /// Input and output width implied by the shorthand.
    #[arg(long)]
    pub io_dim: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Hidden widths: "a..b", "a..b:step" (inclusive) or "a,b,c".
    #[arg(long)]
    pub widths: Option<String>,
    /// Hidden-layer counts, same syntax as --widths.
    #[arg(long)]
    pub depths: Option<String>,
    /// Networks sampled per cell.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub sigma_w: Option<f64>,
    #[arg(long)]
    pub activation: Option<Activation>,
    #[arg(long)]
    pub io_dim: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    /// JSON file holding the state matrix as nested rows.
    #[arg(long)]
    pub a_file: Option<PathBuf>,
    /// Architecture shorthand; repeat for several rows.
    #[arg(long)]
    pub arch: Vec<String>,
    #[arg(long)]
    pub sigma_w: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub activation: Option<Activation>,
    /// Bound compared with the threshold: exact or rmt.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<CertificationMode>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    #[arg(long)]
    pub widths: Option<String>,
    #[arg(long)]
    pub depths: Option<String>,
    #[arg(long)]
    pub sigma_w: Option<f64>,
    #[arg(long)]
    pub sigma_b: Option<f64>,
    /// Points on the input circle.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub io_dim: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrainStudyArgs {
    /// Hidden sizes to train, e.g. "64,256".
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub dataset_size: Option<usize>,
    /// Histogram bins per weight matrix.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub activation: Option<Activation>,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn parse_mode(s: &str) -> Result<CertificationMode, String> {
    match s {
        "exact" => Ok(CertificationMode::Exact),
        "rmt" => Ok(CertificationMode::Rmt),
        _ => Err(format!("unknown mode {s:?} (expected exact or rmt)")),
    }
}

// ---------------------------------------------------------------------------
// Resolved configurations

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub net_file: Option<PathBuf>,
    pub arch: String,
    pub sigma_w: f64,
    pub sigma_b: f64,
    pub activation: Activation,
    pub io_dim: usize,
    pub seed: u64,
    pub format: Format,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            net_file: None,
            arch: "2,300,2".into(),
            sigma_w: 1.0,
            sigma_b: 0.0,
            activation: Activation::Relu,
            io_dim: 2,
            seed: 0,
            format: Format::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub widths: Vec<usize>,
    pub depths: Vec<usize>,
    pub seeds: usize,
    pub sigma_w: f64,
    pub activation: Activation,
    pub io_dim: usize,
    pub seed: u64,
    pub format: Format,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            widths: (10..=100).step_by(10).collect(),
            depths: (1..=8).collect(),
            seeds: 20,
            sigma_w: 1.0,
            activation: Activation::Relu,
            io_dim: 2,
            seed: 0,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    /// State matrix rows; the built-in example system when absent.
    pub a: Option<Vec<Vec<f64>>>,
    pub archs: Vec<String>,
    pub sigma_w: f64,
    pub trials: usize,
    pub activation: Activation,
    pub mode: CertificationMode,
    pub seed: u64,
    pub format: Format,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            a: None,
            archs: ["300x1", "100x3", "50x6", "20x15", "10x30"].map(String::from).to_vec(),
            sigma_w: 1.0,
            trials: 50,
            activation: Activation::Relu,
            mode: CertificationMode::Exact,
            seed: 0,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub widths: Vec<usize>,
    pub depths: Vec<usize>,
    pub sigma_w: f64,
    pub sigma_b: f64,
    pub points: usize,
    pub radius: f64,
    pub io_dim: usize,
    pub seed: u64,
    pub format: Format,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            widths: (30..=100).step_by(10).collect(),
            depths: (3..=8).collect(),
            sigma_w: 1.0,
            sigma_b: 0.0,
            points: 8192,
            radius: 1.0,
            io_dim: 2,
            seed: 0,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainStudyConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dataset_size: usize,
    pub bins: usize,
    pub seed: u64,
    pub format: Format,
}

impl Default for TrainStudyConfig {
    fn default() -> Self {
        let base = TrainConfig::default();
        TrainStudyConfig {
            hidden: vec![64, 256],
            activation: Activation::Tanh,
            epochs: base.epochs,
            learning_rate: base.learning_rate,
            batch_size: base.batch_size,
            dataset_size: DEFAULT_DATASET_SIZE,
            bins: 40,
            seed: 0,
            format: Format::Csv,
        }
    }
}

impl TrainStudyConfig {
    pub fn train_config(&self, hidden: usize) -> Result<TrainConfig, CliError> {
        let arch = Architecture::new(vec![2, hidden, 1], self.activation).map_err(usage)?;
        Ok(TrainConfig {
            arch,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            dataset_size: self.dataset_size,
            seed: self.seed,
        })
    }
}

// ---------------------------------------------------------------------------
// Parsing helpers

/// `"a..b"`, `"a..b:step"` (both ends inclusive), `"a,b,c"` or a single value.
pub fn parse_range(s: &str) -> Result<Vec<usize>, CliError> {
    let s = s.trim();
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("bad integer {t:?} in range {s:?}")))
    };
    let values = if let Some((lo, rest)) = s.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (num(hi)?, num(step)?),
            None => (num(rest)?, 1),
        };
        if step == 0 {
            return Err(usage(format!("range step must be positive in {s:?}")));
        }
        (num(lo)?..=hi).step_by(step).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(usage(format!("range {s:?} is empty")));
    }
    Ok(values)
}

/// Full width list `"2,300,2"` or shorthand `"300x1"` (width × hidden layers,
/// also written with `×`), the latter using `io_dim` for both ends.
pub fn parse_arch(s: &str, io_dim: usize, activation: Activation) -> Result<Architecture, CliError> {
    let s = s.trim();
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("bad architecture {s:?}")))
    };
    let arch = match s.split_once(['x', '×']) {
        Some((w, d)) => Architecture::constant_width(io_dim, num(w)?, num(d)?, io_dim, activation),
        None => Architecture::new(s.split(',').map(num).collect::<Result<_, _>>()?, activation),
    };
    arch.map_err(|e| usage(format!("architecture {s:?}: {e}")))
}

/// Label used in output tables: the shorthand when the network has constant
/// hidden width, else the comma-free width list.
pub fn arch_label(arch: &Architecture) -> String {
    let w = arch.widths();
    let hidden = &w[1..w.len() - 1];
    if !hidden.is_empty() && hidden.iter().all(|&h| h == hidden[0]) && w[0] == w[w.len() - 1] {
        format!("{}x{}", hidden[0], hidden.len())
    } else {
        w.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("-")
    }
}

/// Merges flag overrides over the config file and deserializes the result.
pub fn resolve_config<T: DeserializeOwned>(
    file: Option<&Path>,
    overrides: Map<String, Value>,
) -> Result<T, CliError> {
    let mut map = match file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(usage(format!("{}: config must be a JSON object", path.display()))),
                Err(e) => return Err(usage(format!("{}: {e}", path.display()))),
            }
        }
        None => Map::new(),
    };
    map.extend(overrides);
    if !map.contains_key("seed") {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            let seed: u64 = raw
                .trim()
                .parse()
                .map_err(|_| usage(format!("{SEED_ENV}={raw:?} is not an unsigned 64-bit integer")))?;
            map.insert("seed".into(), seed.into());
        }
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| usage(format!("invalid configuration: {e}")))
}

#[derive(Default)]
struct Overrides(Map<String, Value>);

impl Overrides {
    fn set<T: Serialize>(&mut self, key: &str, value: Option<T>) -> &mut Self {
        if let Some(v) = value {
            self.0.insert(key.into(), serde_json::to_value(v).expect("serializable flag"));
        }
        self
    }

    fn range(&mut self, key: &str, value: Option<&String>) -> Result<&mut Self, CliError> {
        if let Some(s) = value {
            self.0.insert(key.into(), serde_json::to_value(parse_range(s)?).expect("list"));
        }
        Ok(self)
    }

    fn common(&mut self, c: &CommonArgs) -> &mut Self {
        self.set("seed", c.seed).set("format", c.format)
    }
}

// ---------------------------------------------------------------------------
// Output

#[derive(Debug, Clone, Serialize)]
pub struct Meta<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub master_seed: u64,
    pub config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl<'a, C: Serialize> Meta<'a, C> {
    fn new(command: &'static str, master_seed: u64, config: &'a C, reproducible: bool) -> Self {
        let timestamp = (!reproducible).then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Meta {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            command,
            master_seed,
            config,
            timestamp,
        }
    }
}

#[derive(Serialize)]
struct WithMeta<'a, M: Serialize, B: Serialize> {
    meta: &'a M,
    #[serde(flatten)]
    body: B,
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_cell(out: &mut String, cell: &Cell) {
    match cell {
        Cell::Int(v) => write!(out, "{v}").unwrap(),
        Cell::Real(v) => out.push_str(&format_real(*v)),
        Cell::Text(t) if t.contains([',', '"', '\n', '\r']) => {
            write!(out, "\"{}\"", t.replace('"', "\"\"")).unwrap()
        }
        Cell::Text(t) => out.push_str(t),
    }
}

/// Renders a CSV document with a leading metadata comment line.
pub fn render_csv<M: Serialize>(meta: &M, header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = String::new();
    writeln!(out, "# {}", serde_json::to_string(meta).expect("meta serializes")).unwrap();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write_cell(&mut out, cell);
        }
        out.push('\n');
    }
    out
}

fn render_json<M: Serialize, B: Serialize>(meta: &M, body: B) -> String {
    let mut s = serde_json::to_string_pretty(&WithMeta { meta, body }).expect("output serializes");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content).map_err(io_err(path)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(content.as_bytes())
                .and_then(|_| lock.flush())
                .map_err(io_err(Path::new("<stdout>")))
        }
    }
}

/// `dir/stem_suffix.ext` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{suffix}.{ext}"),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

// ---------------------------------------------------------------------------
// Commands

/// Parses, configures the thread pool and dispatches.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let threads = match &cli.command {
        Command::Bounds(a) => a.common.threads,
        Command::Sweep(a) => a.common.threads,
        Command::Stability(a) => a.common.threads,
        Command::Trajectory(a) => a.common.threads,
        Command::TrainStudy(a) => a.common.threads,
    };
    match threads {
        Some(0) => Err(usage("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| usage(format!("cannot start thread pool: {e}")))?
            .install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Bounds(a) => cmd_bounds(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Stability(a) => cmd_stability(&a),
        Command::Trajectory(a) => cmd_trajectory(&a),
        Command::TrainStudy(a) => cmd_train_study(&a),
    }
}

pub fn resolve_bounds(a: &BoundsArgs) -> Result<BoundsConfig, CliError> {
    let mut o = Overrides::default();
    o.set("net_file", a.net_file.as_ref())
        .set("arch", a.arch.as_ref())
        .set("sigma_w", a.sigma_w)
        .set("sigma_b", a.sigma_b)
        .set("activation", a.activation)
        .set("io_dim", a.io_dim)
        .common(&a.common);
    resolve_config(a.common.config.as_deref(), o.0)
}

/// The network a bounds run describes: loaded from file, or sampled.
pub fn bounds_network(cfg: &BoundsConfig) -> Result<Network, CliError> {
    if let Some(path) = &cfg.net_file {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        return Network::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())));
    }
    let arch = parse_arch(&cfg.arch, cfg.io_dim, cfg.activation)?;
    let mut stream = RngStream::new(cfg.seed);
    Network::sample(&arch, cfg.sigma_w, cfg.sigma_b, &mut stream).map_err(usage)
}

fn cmd_bounds(a: &BoundsArgs) -> Result<(), CliError> {
    let cfg = resolve_bounds(a)?;
    let net = bounds_network(&cfg)?;
    let report = bound_report(&net).map_err(numeric)?;
    let meta = Meta::new("bounds", cfg.seed, &cfg, a.common.reproducible);
    let text = match cfg.format {
        Format::Json => render_json(&meta, serde_json::json!({ "report": report })),
        Format::Csv => render_csv(
            &meta,
            &["widths", "sigma_w", "exact_upper", "exact_lower", "rmt_upper", "rmt_lower"],
            &[vec![
                arch_label(net.arch()).into(),
                report.sigma_w.into(),
                report.exact_upper.into(),
                report.exact_lower.into(),
                report.rmt_upper.into(),
                report.rmt_lower.into(),
            ]],
        ),
    };
    emit(a.common.out.as_deref(), &text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub width: usize,
    pub depth: usize,
    pub seed: usize,
    pub exact_upper: f64,
    pub exact_lower: f64,
    pub rmt_upper: f64,
    pub rmt_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub width: usize,
    pub depth: usize,
    pub seeds: usize,
    pub mean_exact_upper: f64,
    pub mean_exact_lower: f64,
    pub rmt_upper: f64,
    pub rmt_lower: f64,
}

pub fn resolve_sweep(a: &SweepArgs) -> Result<SweepConfig, CliError> {
    let mut o = Overrides::default();
    o.range("widths", a.widths.as_ref())?
        .range("depths", a.depths.as_ref())?
        .set("seeds", a.seeds)
        .set("sigma_w", a.sigma_w)
        .set("activation", a.activation)
        .set("io_dim", a.io_dim)
        .common(&a.common);
    resolve_config(a.common.config.as_deref(), o.0)
}

/// Samples `seeds` networks per `(width, depth)` cell. Network `s` of cell
/// `c` (width-major order) draws from substream `s` of the master derived
/// from substream `c`, so rows never depend on scheduling.
pub fn sweep_rows(cfg: &SweepConfig) -> Result<Vec<SweepRow>, CliError> {
    if cfg.widths.is_empty() || cfg.depths.is_empty() || cfg.seeds == 0 {
        return Err(usage("sweep needs nonempty widths, depths and at least one seed"));
    }
    if !(cfg.sigma_w > 0.0 && cfg.sigma_w.is_finite()) {
        return Err(usage(format!("sigma_w must be positive, got {}", cfg.sigma_w)));
    }
    let mut jobs = Vec::new();
    for &w in &cfg.widths {
        for &d in &cfg.depths {
            let arch = Architecture::constant_width(cfg.io_dim, w, d, cfg.io_dim, cfg.activation).map_err(usage)?;
            let cell_seed = RngStream::derive(cfg.seed, jobs.len() as u64 / cfg.seeds as u64).next_u64();
            for s in 0..cfg.seeds {
                jobs.push((arch.clone(), cell_seed, s));
            }
        }
    }
    jobs.par_iter()
        .map(|(arch, cell_seed, s)| {
            let mut stream = RngStream::derive(*cell_seed, *s as u64);
            let net = Network::sample(arch, cfg.sigma_w, 0.0, &mut stream).map_err(numeric)?;
            let w = arch.widths();
            Ok(SweepRow {
                width: w[1],
                depth: arch.depth(),
                seed: *s,
                exact_upper: exact_upper_bound(&net).map_err(numeric)?,
                exact_lower: exact_lower_bound(&net).map_err(numeric)?,
                rmt_upper: rmt_upper_bound(arch, cfg.sigma_w),
                rmt_lower: rmt_lower_bound(arch, cfg.sigma_w),
            })
        })
        .collect()
}

/// Per-cell means of consecutive rows sharing `(width, depth)`.
pub fn sweep_aggregate(rows: &[SweepRow]) -> Vec<SweepCell> {
    let mut cells: Vec<SweepCell> = Vec::new();
    for r in rows {
        match cells.last_mut() {
            Some(c) if c.width == r.width && c.depth == r.depth => {
                c.seeds += 1;
                c.mean_exact_upper += r.exact_upper;
                c.mean_exact_lower += r.exact_lower;
            }
            _ => cells.push(SweepCell {
                width: r.width,
                depth: r.depth,
                seeds: 1,
                mean_exact_upper: r.exact_upper,
                mean_exact_lower: r.exact_lower,
                rmt_upper: r.rmt_upper,
                rmt_lower: r.rmt_lower,
            }),
        }
    }
    for c in &mut cells {
        c.mean_exact_upper /= c.seeds as f64;
        c.mean_exact_lower /= c.seeds as f64;
    }
    cells
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let cfg = resolve_sweep(a)?;
    let rows = sweep_rows(&cfg)?;
    let cells = sweep_aggregate(&rows);
    let meta = Meta::new("sweep", cfg.seed, &cfg, a.common.reproducible);
    let (main, aggregate) = match cfg.format {
        Format::Json => (
            render_json(&meta, serde_json::json!({ "rows": rows })),
            render_json(&meta, serde_json::json!({ "cells": cells })),
        ),
        Format::Csv => {
            let main = rows
                .iter()
                .map(|r| {
                    vec![
                        r.width.into(),
                        r.depth.into(),
                        r.seed.into(),
                        r.exact_upper.into(),
                        r.exact_lower.into(),
                        r.rmt_upper.into(),
                        r.rmt_lower.into(),
                    ]
                })
                .collect::<Vec<_>>();
            let agg = cells
                .iter()
                .map(|c| {
                    vec![
                        c.width.into(),
                        c.depth.into(),
                        c.seeds.into(),
                        c.mean_exact_upper.into(),
                        c.mean_exact_lower.into(),
                        c.rmt_upper.into(),
                        c.rmt_lower.into(),
                    ]
                })
                .collect::<Vec<_>>();
            (
                render_csv(
                    &meta,
                    &["width", "depth", "seed", "exact_upper", "exact_lower", "rmt_upper", "rmt_lower"],
                    &main,
                ),
                render_csv(
                    &meta,
                    &[
                        "width",
                        "depth",
                        "seeds",
                        "mean_exact_upper",
                        "mean_exact_lower",
                        "rmt_upper",
                        "rmt_lower",
                    ],
                    &agg,
                ),
            )
        }
    };
    emit(a.common.out.as_deref(), &main)?;
    if let Some(path) = &a.common.out {
        emit(Some(&sibling(path, "aggregate")), &aggregate)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub architecture: String,
    pub trials: usize,
    pub certified_count: usize,
    pub likelihood_percent: f64,
    pub threshold: f64,
}

pub fn resolve_stability(a: &StabilityArgs) -> Result<StabilityConfig, CliError> {
    let mut o = Overrides::default();
    if let Some(path) = &a.a_file {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let rows: Vec<Vec<f64>> =
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        o.set("a", Some(rows));
    }
    o.set("archs", (!a.arch.is_empty()).then_some(&a.arch))
        .set("sigma_w", a.sigma_w)
        .set("trials", a.trials)
        .set("activation", a.activation)
        .set("mode", a.mode)
        .common(&a.common);
    resolve_config(a.common.config.as_deref(), o.0)
}

/// One likelihood row per architecture, all from the same master seed.
pub fn stability_rows(cfg: &StabilityConfig) -> Result<Vec<StabilityRow>, CliError> {
    let a = match &cfg.a {
        Some(rows) => Matrix::from_rows(rows).map_err(|e| usage(format!("state matrix: {e}")))?,
        None => example_state_matrix(),
    };
    if !a.is_square() {
        return Err(usage(format!("state matrix must be square, got {}x{}", a.rows(), a.cols())));
    }
    let sys = StabilitySystem::with_identity_q(a).map_err(|e| match e {
        StabilityError::NotHurwitz => numeric("state matrix is not Hurwitz; no stability certificate exists"),
        other => numeric(other),
    })?;
    if cfg.trials == 0 {
        return Err(usage("trials must be at least 1"));
    }
    if !(cfg.sigma_w > 0.0 && cfg.sigma_w.is_finite()) {
        return Err(usage(format!("sigma_w must be positive, got {}", cfg.sigma_w)));
    }
    cfg.archs
        .iter()
        .map(|label| {
            let arch = parse_arch(label, sys.dim(), cfg.activation)?;
            let lh = stability_likelihood_with_mode(&sys, &arch, cfg.sigma_w, cfg.trials, cfg.seed, cfg.mode)
                .map_err(numeric)?;
            Ok(StabilityRow {
                architecture: label.clone(),
                trials: lh.trials,
                certified_count: lh.certified,
                likelihood_percent: lh.percent(),
                threshold: sys.threshold(),
            })
        })
        .collect()
}

fn cmd_stability(a: &StabilityArgs) -> Result<(), CliError> {
    let cfg = resolve_stability(a)?;
    let rows = stability_rows(&cfg)?;
    let meta = Meta::new("stability", cfg.seed, &cfg, a.common.reproducible);
    let text = match cfg.format {
        Format::Json => render_json(&meta, serde_json::json!({ "rows": rows })),
        Format::Csv => render_csv(
            &meta,
            &["architecture", "trials", "certified_count", "likelihood_percent", "threshold"],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.architecture.clone().into(),
                        r.trials.into(),
                        r.certified_count.into(),
                        r.likelihood_percent.into(),
                        r.threshold.into(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    };
    emit(a.common.out.as_deref(), &text)
}

pub fn resolve_trajectory(a: &TrajectoryArgs) -> Result<TrajectoryConfig, CliError> {
    let mut o = Overrides::default();
    o.range("widths", a.widths.as_ref())?
        .range("depths", a.depths.as_ref())?
        .set("sigma_w", a.sigma_w)
        .set("sigma_b", a.sigma_b)
        .set("points", a.points)
        .set("radius", a.radius)
        .set("io_dim", a.io_dim)
        .common(&a.common);
    resolve_config(a.common.config.as_deref(), o.0)
}

fn cmd_trajectory(a: &TrajectoryArgs) -> Result<(), CliError> {
    let cfg = resolve_trajectory(a)?;
    if !(cfg.sigma_w > 0.0 && cfg.sigma_w.is_finite()) || !(cfg.sigma_b >= 0.0 && cfg.sigma_b.is_finite()) {
        return Err(usage("sigma_w must be positive and sigma_b nonnegative"));
    }
    let traj = circle_trajectory(cfg.io_dim, cfg.radius, cfg.points).map_err(usage)?;
    let rows = expressiveness_correlation_with_bias(&cfg.widths, &cfg.depths, cfg.sigma_w, cfg.sigma_b, cfg.seed, &traj)
        .map_err(numeric)?;
    let meta = Meta::new("trajectory", cfg.seed, &cfg, a.common.reproducible);
    let text = match cfg.format {
        Format::Json => render_json(&meta, serde_json::json!({ "rows": rows })),
        Format::Csv => render_csv(
            &meta,
            &["width", "depth", "stretch_ratio", "rmt_lower", "exact_upper"],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.width.into(),
                        r.depth.into(),
                        r.stretch_ratio.into(),
                        r.rmt_lower.into(),
                        r.exact_upper.into(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    };
    emit(a.common.out.as_deref(), &text)
}

pub fn resolve_train_study(a: &TrainStudyArgs) -> Result<TrainStudyConfig, CliError> {
    let mut o = Overrides::default();
    o.range("hidden", a.hidden.as_ref())?
        .set("epochs", a.epochs)
        .set("learning_rate", a.learning_rate)
        .set("batch_size", a.batch_size)
        .set("dataset_size", a.dataset_size)
        .set("bins", a.bins)
        .set("activation", a.activation)
        .common(&a.common);
    resolve_config(a.common.config.as_deref(), o.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainStudyRow {
    pub hidden: usize,
    pub layer: usize,
    pub rows: usize,
    pub cols: usize,
    pub fit_mean: f64,
    pub fit_std: f64,
    pub true_norm: f64,
    pub estimated_norm: f64,
    pub relative_error: f64,
    pub final_mse: f64,
}

/// Trains one network per hidden size on a shared dataset.
pub fn train_networks(cfg: &TrainStudyConfig) -> Result<Vec<(Network, f64)>, CliError> {
    if cfg.hidden.is_empty() {
        return Err(usage("train-study needs at least one hidden size"));
    }
    let configs = cfg
        .hidden
        .iter()
        .map(|&h| {
            let tc = cfg.train_config(h)?;
            tc.validate().map_err(usage)?;
            Ok(tc)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let data = generate_dataset(cfg.dataset_size, cfg.seed);
    configs
        .par_iter()
        .map(|tc| {
            let outcome = train_sgd(tc, &data).map_err(numeric)?;
            Ok((outcome.network, outcome.final_mse))
        })
        .collect()
}

pub fn train_study_rows(trained: &[(Network, f64)]) -> Result<Vec<TrainStudyRow>, CliError> {
    let nets: Vec<Network> = trained.iter().map(|(n, _)| n.clone()).collect();
    let report = norm_comparison_report(&nets).map_err(numeric)?;
    Ok(report
        .into_iter()
        .map(|r| {
            let (net, mse) = &trained[r.network];
            let fit = fit_gaussian(&net.weights()[r.layer - 1]);
            TrainStudyRow {
                hidden: net.arch().widths()[1],
                layer: r.layer,
                rows: r.rows,
                cols: r.cols,
                fit_mean: fit.mean,
                fit_std: fit.std,
                true_norm: r.true_norm,
                estimated_norm: r.estimated_norm,
                relative_error: r.relative_error,
                final_mse: *mse,
            }
        })
        .collect())
}

fn cmd_train_study(a: &TrainStudyArgs) -> Result<(), CliError> {
    let cfg = resolve_train_study(a)?;
    if cfg.bins < 2 {
        return Err(usage("bins must be at least 2"));
    }
    let dir = a.common.out.clone().unwrap_or_else(|| PathBuf::from("train-study"));
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let trained = train_networks(&cfg)?;
    let rows = train_study_rows(&trained)?;
    let meta = Meta::new("train-study", cfg.seed, &cfg, a.common.reproducible);
    let ext = match cfg.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };

    for (net, _) in &trained {
        let h = net.arch().widths()[1];
        let path = dir.join(format!("network_h{h}.json"));
        emit(Some(&path), &render_json(&meta, net.to_document()))?;
        for (l, w) in net.weights().iter().enumerate() {
            let hist = weight_histogram(w, cfg.bins).map_err(numeric)?;
            let fit = fit_gaussian(w);
            let text = match cfg.format {
                Format::Json => render_json(
                    &meta,
                    serde_json::json!({ "fit": fit, "bins": hist }),
                ),
                Format::Csv => render_csv(
                    &meta,
                    &["bin_center", "count"],
                    &hist.iter().map(|&(c, n)| vec![c.into(), n.into()]).collect::<Vec<_>>(),
                ),
            };
            emit(Some(&dir.join(format!("histogram_h{h}_w{}.{ext}", l + 1))), &text)?;
        }
    }

    let text = match cfg.format {
        Format::Json => render_json(&meta, serde_json::json!({ "rows": rows })),
        Format::Csv => render_csv(
            &meta,
            &[
                "hidden",
                "layer",
                "rows",
                "cols",
                "fit_mean",
                "fit_std",
                "true_norm",
                "estimated_norm",
                "relative_error",
                "final_mse",
            ],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.hidden.into(),
                        r.layer.into(),
                        r.rows.into(),
                        r.cols.into(),
                        r.fit_mean.into(),
                        r.fit_std.into(),
                        r.true_norm.into(),
                        r.estimated_norm.into(),
                        r.relative_error.into(),
                        r.final_mse.into(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    };
    emit(Some(&dir.join(format!("norm_comparison.{ext}"))), &text)
}
