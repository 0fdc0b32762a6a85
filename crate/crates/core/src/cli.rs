//! Command-line front end. `run` returns the process exit code:
//! 0 success, 1 usage, 2 bad data or format, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::detector::{detect, score, threshold, CovRaster, DetectorConfig, MetricConvention, DEFAULT_CUT};
use crate::error::Error;
use crate::estimation::{estimate, LooksMode};
use crate::experiments::{
    run_power_experiment, run_same_target_experiment, run_size_experiment, PowerExperimentConfig, RegionPairing,
    SameTargetConfig, SizeExperimentConfig, DEFAULT_REPLICATIONS,
};
use crate::hypotests::{two_sample, Method, TestOptions};
use crate::infotheory::KronConvention;
use crate::io;
use crate::mathcore::HermitianMatrix;
use crate::model::{RngSeed, WishartParams, WishartSampler};
use crate::presets;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const VERSION_TEXT: &str = concat!(env!("CARGO_PKG_VERSION"), " (PCMR 1, PVM 1)");

#[derive(Debug, Parser)]
#[command(name = "wishart-cd", version = VERSION_TEXT, about = "Change detection for multilook PolSAR covariance data")]
struct Cli {
    /// Worker threads for Monte Carlo and detection (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw Wishart observations into a sample file or raster.
    Sample(SampleArgs),
    /// ML estimates of Σ and L for a sample, as JSON.
    Estimate(EstimateArgs),
    /// Two-sample test between two sample files, as JSON.
    Test(TestArgs),
    /// Empirical test sizes, as CSV.
    McSize(McArgs),
    /// Empirical power against scaled alternatives, as CSV.
    McPower(McArgs),
    /// Resampling size experiment on regions of a single target, as CSV.
    SameTarget(SameTargetArgs),
    /// Per-pixel p-value map and change mask for two co-registered rasters.
    Detect(DetectArgs),
    /// Agreement of a change mask with a reference mask, as JSON.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Named covariance preset.
    #[arg(long, value_name = "NAME", conflicts_with = "sigma")]
    preset: Option<String>,
    /// JSON file holding Σ as rows of [re, im] pairs.
    #[arg(long, value_name = "FILE")]
    sigma: Option<PathBuf>,
    /// Number of looks.
    #[arg(long, default_value_t = presets::FLEVOLAND_NOMINAL_LOOKS)]
    looks: f64,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Number of observations (sample files only).
    #[arg(short, long, default_value_t = 100)]
    n: usize,
    /// Raster rows; with --cols, writes a PCMR raster instead of a sample file.
    #[arg(long, requires = "cols")]
    rows: Option<usize>,
    #[arg(long, requires = "rows")]
    cols: Option<usize>,
    /// Multiply Σ by this factor on the right half of a raster.
    #[arg(long, default_value_t = 1.0)]
    right_half_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (.wsample.json or .pcmr).
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum LooksArg {
    Fixed(f64),
    Estimate,
}

fn parse_looks(s: &str) -> Result<LooksArg, String> {
    if s == "estimate" {
        return Ok(LooksArg::Estimate);
    }
    let v = s.strip_prefix("fixed:").unwrap_or(s);
    v.parse::<f64>()
        .ok()
        .filter(|l| l.is_finite() && *l > 0.0)
        .map(LooksArg::Fixed)
        .ok_or_else(|| format!("expected `estimate` or `fixed:L`, got {s:?}"))
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KronArg {
    Transposed,
    Literal,
}

#[derive(Debug, Args)]
struct TestFlags {
    /// lr, kl, shannon or renyi.
    #[arg(long, default_value = "lr", value_parser = parse_method)]
    method: Method,
    /// Rényi order; overrides the order implied by --method renyi.
    #[arg(long)]
    beta: Option<f64>,
    /// `estimate` or `fixed:L`; defaults to the looks recorded in the input, else `estimate`.
    #[arg(long, value_parser = parse_looks)]
    looks: Option<LooksArg>,
    /// Kronecker convention in the entropy variance.
    #[arg(long, value_enum, default_value_t = KronArg::Transposed)]
    kron: KronArg,
    /// Denominator h'(0)φ''(1) of the KL statistic.
    #[arg(long, default_value_t = 1.0)]
    kl_normalization: f64,
}

impl TestFlags {
    fn method(&self) -> Result<Method, CliError> {
        match (self.method, self.beta) {
            (Method::Renyi(_), Some(b)) => Ok(Method::Renyi(b)),
            (m, None) => Ok(m),
            (_, Some(_)) => Err(CliError::Usage("--beta only applies to --method renyi".into())),
        }
    }

    fn options(&self) -> Result<TestOptions, CliError> {
        if !(self.kl_normalization > 0.0) {
            return Err(CliError::Usage("--kl-normalization must be positive".into()));
        }
        Ok(TestOptions {
            kl_normalization: self.kl_normalization,
            kron: match self.kron {
                KronArg::Transposed => KronConvention::Transposed,
                KronArg::Literal => KronConvention::Literal,
            },
        })
    }

    fn mode(&self, hint: Option<f64>) -> LooksMode {
        resolve_looks(self.looks, hint)
    }
}

fn resolve_looks(arg: Option<LooksArg>, hint: Option<f64>) -> LooksMode {
    match (arg, hint) {
        (Some(LooksArg::Fixed(l)), _) => LooksMode::Known(l),
        (Some(LooksArg::Estimate), _) => LooksMode::Estimated,
        (None, Some(l)) => LooksMode::Known(l),
        (None, None) => LooksMode::Estimated,
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Sample file (.wsample.json or .pcmr).
    input: PathBuf,
    /// `estimate` (default) or `fixed:L`.
    #[arg(long, value_parser = parse_looks)]
    looks: Option<LooksArg>,
}

#[derive(Debug, Args)]
struct TestArgs {
    first: PathBuf,
    second: PathBuf,
    #[command(flatten)]
    flags: TestFlags,
}

#[derive(Debug, Args)]
struct McArgs {
    /// JSON config mirroring the experiment config type.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Build the published configuration around a named preset.
    #[arg(long)]
    preset: Option<String>,
    /// Override the replication count.
    #[arg(long)]
    replications: Option<usize>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path (default stdout).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PairingArg {
    Same,
    Cross,
}

#[derive(Debug, Args)]
struct SameTargetArgs {
    /// Region files (.wsample.json or .pcmr), each assumed to hold one target.
    #[arg(required = true)]
    regions: Vec<PathBuf>,
    /// Observations per subset; repeatable.
    #[arg(short = 'n', long = "n", required = true)]
    sample_sizes: Vec<usize>,
    #[arg(long = "level", default_values_t = [0.01, 0.05, 0.1])]
    levels: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    replications: usize,
    /// Methods to run; repeatable (default: all four).
    #[arg(long = "method", value_parser = parse_method)]
    methods: Vec<Method>,
    /// `estimate` or `fixed:L`; defaults to the looks recorded in the first region.
    #[arg(long, value_parser = parse_looks)]
    looks: Option<LooksArg>,
    #[arg(long, value_enum, default_value_t = PairingArg::Same)]
    pairing: PairingArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DetectArgs {
    before: PathBuf,
    after: PathBuf,
    #[command(flatten)]
    flags: TestFlags,
    /// Odd window side length.
    #[arg(long, default_value_t = 3)]
    window: usize,
    /// p-values at or below this mark change.
    #[arg(long, default_value_t = DEFAULT_CUT)]
    threshold: f64,
    /// PVM p-value map output.
    #[arg(long)]
    pvm: Option<PathBuf>,
    /// PGM change mask output.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// PGM rendering of the p-value map.
    #[arg(long)]
    render: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Detector mask (PGM, nonzero = change).
    mask: PathBuf,
    /// Reference mask (PGM, nonzero = change).
    reference: PathBuf,
    /// Swap FP and FN to follow the literal table legend.
    #[arg(long)]
    paper_literal_metrics: bool,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Lib(_) => EXIT_DATA,
        }
    }

    fn line(&self) -> String {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Lib(e) if e.is_numerical() => ("numerical", e.to_string()),
            CliError::Lib(e) => ("data", e.to_string()),
        };
        format!("error[{kind}]: {}", msg.replace('\n', " "))
    }
}

/// Parses `args` (program name first) and runs the chosen subcommand,
/// writing results to `stdout` and diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    // Keep clap's message, minus its usage banner, on one line.
                    let text = e.to_string();
                    let msg: Vec<&str> = text
                        .lines()
                        .map(str::trim)
                        .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                        .filter(|l| !l.is_empty())
                        .collect();
                    let msg = msg.join(" ").trim_start_matches("error: ").to_string();
                    let _ = writeln!(stderr, "{}", CliError::Usage(msg).line());
                    EXIT_USAGE
                }
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            let _ = writeln!(stderr, "{}", CliError::Usage(e.to_string()).line());
            return EXIT_USAGE;
        }
    };
    let mut buffer = Vec::new();
    let outcome = pool.install(|| dispatch(cli.command, &mut buffer));
    let _ = stdout.write_all(&buffer);
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.line());
            e.code()
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Sample(a) => cmd_sample(a, stdout),
        Command::Estimate(a) => cmd_estimate(a, stdout),
        Command::Test(a) => cmd_test(a, stdout),
        Command::McSize(a) => cmd_mc_size(a, stdout),
        Command::McPower(a) => cmd_mc_power(a, stdout),
        Command::SameTarget(a) => cmd_same_target(a, stdout),
        Command::Detect(a) => cmd_detect(a, stdout),
        Command::Metrics(a) => cmd_metrics(a, stdout),
    }
}

fn emit_json<T: Serialize>(value: &T, stdout: &mut dyn Write) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

fn emit_text(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn preset(name: &str) -> Result<HermitianMatrix, CliError> {
    presets::by_name(name).ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}")))
}

fn params(a: &ParamArgs) -> Result<WishartParams, CliError> {
    let sigma = match (&a.preset, &a.sigma) {
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => serde_json::from_slice(&fs::read(path)?)?,
        (None, None) => return Err(CliError::Usage("give --preset or --sigma".into())),
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    };
    Ok(WishartParams::new(sigma, a.looks)?)
}

fn cmd_sample(a: SampleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let theta = params(&a.params)?;
    let left = WishartSampler::new(&theta)?;
    let mut rng = RngSeed(a.seed).rng();
    let mut normals = Default::default();
    let written = match (a.rows, a.cols) {
        (Some(rows), Some(cols)) => {
            if !(a.right_half_scale > 0.0) {
                return Err(CliError::Usage("--right-half-scale must be positive".into()));
            }
            let right = WishartSampler::new(&theta.scaled(a.right_half_scale)?)?;
            let mut pixels = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                for c in 0..cols {
                    let s = if c < cols / 2 { &left } else { &right };
                    pixels.push(s.draw(&mut rng, &mut normals));
                }
            }
            io::write_raster(&CovRaster::new(rows, cols, theta.looks(), pixels)?, &a.out)?;
            rows * cols
        }
        _ => {
            if a.n == 0 {
                return Err(CliError::Usage("-n must be positive".into()));
            }
            let s = left.sample(a.n, &mut rng)?;
            if a.out.extension().is_some_and(|e| e == "pcmr") {
                io::write_raster(&CovRaster::new(1, a.n, theta.looks(), s.into_observations())?, &a.out)?;
            } else {
                io::write_sample_json(&s, Some(theta.looks()), &a.out)?;
            }
            a.n
        }
    };
    #[derive(Serialize)]
    struct Summary<'a> {
        path: &'a Path,
        observations: usize,
        seed: u64,
    }
    emit_json(
        &Summary {
            path: &a.out,
            observations: written,
            seed: a.seed,
        },
        stdout,
    )
}

fn cmd_estimate(a: EstimateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (sample, _) = io::read_sample(&a.input)?;
    let mode = resolve_looks(a.looks.or(Some(LooksArg::Estimate)), None);
    emit_json(&estimate(&sample, mode)?, stdout)
}

fn cmd_test(a: TestArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (x, hx) = io::read_sample(&a.first)?;
    let (y, hy) = io::read_sample(&a.second)?;
    let hint = if hx == hy { hx } else { None };
    let result = two_sample(a.flags.method()?, &x, &y, a.flags.mode(hint), &a.flags.options()?)?;
    emit_json(&result, stdout)
}

fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

fn cmd_mc_size(a: McArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg: SizeExperimentConfig = match (&a.config, &a.preset) {
        (Some(path), _) => load_config(path)?,
        (None, Some(name)) => SizeExperimentConfig {
            theta: WishartParams::new(preset(name)?, presets::FLEVOLAND_NOMINAL_LOOKS)?,
            sample_sizes: vec![10, 20, 30, 40, 50],
            levels: vec![0.01, 0.05, 0.1],
            replications: DEFAULT_REPLICATIONS,
            methods: Method::ALL.to_vec(),
            looks_mode: None,
            options: TestOptions::default(),
            seed: 0,
        },
        (None, None) => return Err(CliError::Usage("give --config or --preset".into())),
    };
    cfg.replications = a.replications.unwrap_or(cfg.replications);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    emit_text(&run_size_experiment(&cfg)?.to_csv(), a.out.as_deref(), stdout)
}

fn cmd_mc_power(a: McArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg: PowerExperimentConfig = match (&a.config, &a.preset) {
        (Some(path), _) => load_config(path)?,
        (None, Some(name)) => PowerExperimentConfig {
            theta: WishartParams::new(preset(name)?, presets::FLEVOLAND_NOMINAL_LOOKS)?,
            contrasts: vec![0.2, 0.3, 0.4],
            sample_sizes: vec![10, 20, 30, 40, 50],
            level: 0.01,
            replications: DEFAULT_REPLICATIONS,
            methods: Method::ALL.to_vec(),
            looks_mode: None,
            options: TestOptions::default(),
            seed: 0,
        },
        (None, None) => return Err(CliError::Usage("give --config or --preset".into())),
    };
    cfg.replications = a.replications.unwrap_or(cfg.replications);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    emit_text(&run_power_experiment(&cfg)?.to_csv(), a.out.as_deref(), stdout)
}

fn cmd_same_target(a: SameTargetArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut regions = Vec::with_capacity(a.regions.len());
    let mut hint = None;
    for (i, path) in a.regions.iter().enumerate() {
        let (s, h) = io::read_sample(path)?;
        if i == 0 {
            hint = h;
        }
        regions.push(s);
    }
    let cfg = SameTargetConfig {
        sample_sizes: a.sample_sizes,
        levels: a.levels,
        replications: a.replications,
        methods: if a.methods.is_empty() { Method::ALL.to_vec() } else { a.methods },
        looks_mode: resolve_looks(a.looks, hint),
        pairing: match a.pairing {
            PairingArg::Same => RegionPairing::SameRegion,
            PairingArg::Cross => RegionPairing::CrossRegion,
        },
        options: TestOptions::default(),
        seed: a.seed,
    };
    emit_text(&run_same_target_experiment(&regions, &cfg)?.to_csv(), a.out.as_deref(), stdout)
}

fn cmd_detect(a: DetectArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if !(a.threshold > 0.0 && a.threshold < 1.0) {
        return Err(CliError::Usage("--threshold must lie in (0, 1)".into()));
    }
    let before = io::read_raster(&a.before)?;
    let after = io::read_raster(&a.after)?;
    let cfg = DetectorConfig {
        method: a.flags.method()?,
        window: a.window,
        looks_mode: Some(a.flags.mode(Some(before.nominal_looks()))),
        options: a.flags.options()?,
    };
    let map = detect(&before, &after, &cfg)?;
    let mask = threshold(&map, a.threshold);
    if let Some(path) = &a.pvm {
        io::write_pvalue_map(&map, path)?;
    }
    if let Some(path) = &a.mask {
        io::write_mask(&mask, path)?;
    }
    if let Some(path) = &a.render {
        fs::write(path, io::render_pvalue_map(&map, a.threshold))?;
    }
    #[derive(Serialize)]
    struct Summary {
        rows: usize,
        cols: usize,
        method: Method,
        window: usize,
        threshold: f64,
        changed: usize,
        failures: usize,
    }
    emit_json(
        &Summary {
            rows: map.rows,
            cols: map.cols,
            method: cfg.method,
            window: cfg.window,
            threshold: a.threshold,
            changed: mask.count(),
            failures: map.failures,
        },
        stdout,
    )
}

fn cmd_metrics(a: MetricsArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mask = io::read_mask(&a.mask)?;
    let reference = io::read_mask(&a.reference)?;
    let convention = if a.paper_literal_metrics {
        MetricConvention::PaperLiteral
    } else {
        MetricConvention::Conventional
    };
    emit_json(&score(&mask, &reference, convention)?, stdout)
}
