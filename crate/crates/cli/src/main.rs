use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use uslkit::fitting::{bootstrap, compare_params, BootstrapOptions};
use uslkit::queueing::{queue_dataset, QueueModel};
use uslkit::validation::Verdict;
use uslkit::{
    add_noise, aggregate_runs, efficiency, extract_steady_state, fit_usl, generate_synthetic, predict_throughput,
    usl_capacity, Dataset, ScalabilityCurve, UslParams,
};

mod config;
mod io;
mod report;

use config::{AnalysisConfig, FileConfig, Format, Input, ModeArg, Overrides};
use io::ParseError;
use report::{render, ComparisonReport, PeakReport, PredictionReport, PredictionRow, Report, SteadyReport, SteadyRow};

mod exit {
    pub const OTHER: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const INVALID: u8 = 4;
    pub const INSUFFICIENT: u8 = 5;
    pub const NO_STEADY_STATE: u8 = 6;
    pub const BASELINE: u8 = 7;
}

/// Curve rows in a report.
const REPORT_CURVE_SAMPLES: usize = 64;
/// Curve rows in `curve.csv`.
const PLOT_CURVE_SAMPLES: usize = 512;

#[derive(Parser)]
#[command(name = "uslkit", version, about = "Scalability analysis with the Universal Scalability Law")]
struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check capacity ratios and efficiencies of a points file.
    Validate {
        /// Points CSV (`n,x`).
        points: PathBuf,
        /// Efficiency above 1 + tolerance is a hard flag.
        #[arg(long, allow_negative_numbers = true)]
        tolerance: Option<f64>,
    },
    /// Fit contention and coherency coefficients and report peak, regime and residuals.
    Fit(FitArgs),
    /// Peak concurrency for given coefficients.
    Peak {
        /// Contention coefficient.
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        /// Coherency coefficient.
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
    },
    /// Capacity, efficiency and throughput at the given loads.
    Predict {
        /// Contention coefficient.
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        /// Coherency coefficient.
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        /// Throughput at N = 1; enables absolute throughput predictions.
        #[arg(long, allow_negative_numbers = true)]
        x1: Option<f64>,
        /// Loads, e.g. `1,2,4,8` or `1..32`.
        #[arg(long, value_parser = parse_loads)]
        n: Loads,
    },
    /// Compare two fits (JSON reports from `fit --format json`, or points files to fit).
    Compare {
        /// First fit JSON or points CSV.
        a: PathBuf,
        /// Second fit JSON or points CSV.
        b: PathBuf,
        /// Fit mode for points files.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Efficiency above 1 + tolerance is a hard flag.
        #[arg(long, allow_negative_numbers = true)]
        tolerance: Option<f64>,
        /// Fit points files even when validation calls them invalid.
        #[arg(long)]
        force: bool,
    },
    /// Write a synthetic points file.
    Simulate {
        #[command(subcommand)]
        source: SimulateSource,
    },
    /// Extract steady-state throughput from per-load time series.
    Steady {
        /// Directory with `manifest.csv` (`n,file`) or files named `*_N<load>.csv`.
        dir: PathBuf,
        #[command(flatten)]
        trim: TrimArgs,
        /// Also write the steady-state points to this CSV file.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrimArgs {
    /// Seconds to drop from the start of every run.
    #[arg(long)]
    trim_up: Option<f64>,
    /// Seconds to drop from the end of every run.
    #[arg(long)]
    trim_down: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    /// Points CSV (`n,x`).
    #[arg(required_unless_present = "series_dir", conflicts_with = "series_dir")]
    points: Option<PathBuf>,
    /// Directory of per-load time series instead of a points file.
    #[arg(long)]
    series_dir: Option<PathBuf>,
    /// Fit mode; normalized when the data has an n = 1 point.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Fit even when validation calls the data invalid.
    #[arg(long)]
    force: bool,
    /// Extend the model curve out to this load.
    #[arg(long, allow_negative_numbers = true)]
    extrapolate: Option<f64>,
    /// Write `curve.csv` and `points.csv` for plotting into this directory.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
    /// Number of bootstrap replicates for coefficient intervals.
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Seed for bootstrap resampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Efficiency above 1 + tolerance is a hard flag.
    #[arg(long, allow_negative_numbers = true)]
    tolerance: Option<f64>,
    #[command(flatten)]
    trim: TrimArgs,
}

#[derive(Subcommand)]
enum SimulateSource {
    /// Throughput from the capacity function with multiplicative Gaussian noise.
    Usl {
        /// Contention coefficient.
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        /// Coherency coefficient.
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        x1: f64,
        #[command(flatten)]
        common: SimulateCommon,
    },
    /// Throughput of a machine-repairman queue.
    Queue {
        /// Mean service time.
        #[arg(long, allow_negative_numbers = true)]
        service: f64,
        /// Mean think time.
        #[arg(long, allow_negative_numbers = true)]
        think: f64,
        /// Load-dependent service constant (synchronous model only).
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        c: f64,
        /// Queue solution used for the throughput.
        #[arg(long, value_enum, default_value_t = QueueArg::Sync)]
        model: QueueArg,
        #[command(flatten)]
        common: SimulateCommon,
    },
}

#[derive(Args)]
struct SimulateCommon {
    /// Loads, e.g. `1,2,4,8` or `1..32`.
    #[arg(long, value_parser = parse_loads)]
    n: Loads,
    /// Standard deviation of the relative noise.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    noise: f64,
    /// Noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueueArg {
    /// Synchronous bound (all requests enqueued at once).
    Sync,
    /// Exact mean value analysis.
    Mva,
}

#[derive(Debug, Clone)]
struct Loads(Vec<f64>);

/// Comma-separated loads; `a..b` expands to every integer from `a` to `b`.
fn parse_loads(text: &str) -> Result<Loads, String> {
    let mut loads = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((lo, hi)) = item.split_once("..") {
            let lo: u64 = lo.trim().parse().map_err(|_| format!("bad range start in `{item}`"))?;
            let hi: u64 = hi.trim().parse().map_err(|_| format!("bad range end in `{item}`"))?;
            if lo > hi {
                return Err(format!("empty range `{item}`"));
            }
            loads.extend((lo..=hi).map(|n| n as f64));
        } else {
            let n: f64 = item.parse().map_err(|_| format!("bad load `{item}`"))?;
            loads.push(n);
        }
    }
    if loads.is_empty() {
        return Err("no loads given".into());
    }
    Ok(Loads(loads))
}

#[derive(Debug)]
struct Refused(String);

impl fmt::Display for Refused {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Refused {}

#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use uslkit::Error as E;
    if err.downcast_ref::<ParseError>().is_some() {
        return exit::PARSE;
    }
    if err.downcast_ref::<Refused>().is_some() {
        return exit::INVALID;
    }
    if err.downcast_ref::<Usage>().is_some() {
        return exit::USAGE;
    }
    match err.downcast_ref::<E>().map(E::root) {
        Some(E::InsufficientData { .. } | E::DegenerateData) => exit::INSUFFICIENT,
        Some(E::NoSteadyState(_) | E::TrimExceedsRun { .. }) => exit::NO_STEADY_STATE,
        Some(E::MissingBaseline | E::ZeroBaseline) => exit::BASELINE,
        Some(E::InvalidPoint(_) | E::DuplicateLoad(_) | E::InvalidSeries(_)) => exit::PARSE,
        Some(E::Domain(_) | E::InvalidParams(_) | E::InvalidNoise(_) | E::MissingNormalization) => exit::USAGE,
        _ => exit::OTHER,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn emit(text: &str) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes())?;
    stdout.flush()?;
    Ok(())
}

fn resolve(input: Input, flags: Overrides) -> Result<AnalysisConfig> {
    let file = FileConfig::from_env().map_err(|e| Usage(format!("{e:#}")))?;
    AnalysisConfig::resolve(input, &file, &flags).map_err(|e| Usage(format!("{e:#}")).into())
}

fn params(alpha: f64, beta: f64) -> Result<UslParams> {
    Ok(UslParams::new(alpha, beta)?)
}

fn run(cli: Cli) -> Result<u8> {
    let format = cli.format;
    match cli.command {
        Command::Validate { points, tolerance } => {
            let cfg = resolve(Input::Points(points.clone()), Overrides { format, tolerance, ..Default::default() })?;
            let dataset = io::read_points(&points)?;
            let report = uslkit::validate_dataset(&dataset, cfg.tolerance)?;
            emit(&render(&report, cfg.format)?)?;
            Ok(if report.verdict == Verdict::Invalid { exit::INVALID } else { 0 })
        }
        Command::Fit(args) => cmd_fit(args, format),
        Command::Peak { alpha, beta } => {
            let cfg = resolve(Input::Points(PathBuf::new()), Overrides { format, ..Default::default() })?;
            emit(&render(&PeakReport::new(&params(alpha, beta)?), cfg.format)?)?;
            Ok(0)
        }
        Command::Predict { alpha, beta, x1, n } => {
            let cfg = resolve(Input::Points(PathBuf::new()), Overrides { format, ..Default::default() })?;
            let mut p = params(alpha, beta)?;
            if let Some(x1) = x1 {
                p = p.with_x1(x1)?;
            }
            let rows =
                n.0.iter()
                    .map(|&n| {
                        let capacity = usl_capacity(n, &p)?;
                        Ok(PredictionRow {
                            n,
                            capacity,
                            efficiency: efficiency(n, capacity)?,
                            throughput: p.x1().map(|_| predict_throughput(n, &p)).transpose()?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
            let report = PredictionReport { alpha, beta, x1: p.x1(), rows };
            emit(&render(&report, cfg.format)?)?;
            Ok(0)
        }
        Command::Compare { a, b, mode, tolerance, force } => {
            let flags = Overrides { format, mode, tolerance, ..Default::default() };
            let cfg = resolve(Input::Points(a.clone()), flags)?;
            let pa = load_fit(&a, &cfg, force)?;
            let pb = load_fit(&b, &cfg, force)?;
            let report = ComparisonReport {
                a: a.display().to_string(),
                b: b.display().to_string(),
                comparison: compare_params(&pa, &pb),
            };
            emit(&render(&report, cfg.format)?)?;
            Ok(0)
        }
        Command::Simulate { source } => cmd_simulate(source),
        Command::Steady { dir, trim, output } => {
            let flags = Overrides { format, trim_up: trim.trim_up, trim_down: trim.trim_down, ..Default::default() };
            let cfg = resolve(Input::SeriesDir(dir.clone()), flags)?;
            let runs = io::read_series_dir(&dir, cfg.trim)?;
            let dataset = aggregate_runs(&runs, &cfg.steady)?;
            let windows = runs
                .iter()
                .map(|run| Ok(SteadyRow { load: run.load(), window: extract_steady_state(run, &cfg.steady)? }))
                .collect::<Result<Vec<_>>>()?;
            if let Some(path) = output {
                io::write_points_file(&dataset, Some("steady-state throughput"), &path)?;
            }
            emit(&render(&SteadyReport { windows }, cfg.format)?)?;
            Ok(0)
        }
    }
}

/// Reads points from a file or a series directory.
fn load_dataset(cfg: &AnalysisConfig) -> Result<Dataset> {
    match &cfg.input {
        Input::Points(path) => io::read_points(path),
        Input::SeriesDir(dir) => {
            let runs = io::read_series_dir(dir, cfg.trim)?;
            Ok(aggregate_runs(&runs, &cfg.steady)?)
        }
    }
}

/// Validation report when the data has an `n = 1` baseline; an invalid verdict is refused
/// unless `force` is set.
fn checked(
    dataset: &Dataset,
    cfg: &AnalysisConfig,
    force: bool,
    source: &Path,
) -> Result<Option<uslkit::ValidationReport>> {
    if dataset.baseline().is_none() {
        return Ok(None);
    }
    let report = uslkit::validate_dataset(dataset, cfg.tolerance)?;
    if report.verdict == Verdict::Invalid && !force {
        let flagged: Vec<String> = report.hard_flagged().map(|r| r.n.to_string()).collect();
        return Err(Refused(format!(
            "refusing to fit {}: validation verdict is invalid (efficiency above 1 at N = {}); \
             inspect it with `uslkit validate` or pass --force",
            source.display(),
            flagged.join(", ")
        ))
        .into());
    }
    Ok(Some(report))
}

fn load_fit(path: &Path, cfg: &AnalysisConfig, force: bool) -> Result<UslParams> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        return io::read_fit_json(path);
    }
    let dataset = io::read_points(path)?;
    checked(&dataset, cfg, force, path)?;
    Ok(fit_usl(&dataset, &cfg.fit)?.params)
}

fn cmd_fit(args: FitArgs, format: Option<Format>) -> Result<u8> {
    let input = match (args.points, args.series_dir) {
        (Some(p), None) => Input::Points(p),
        (None, Some(d)) => Input::SeriesDir(d),
        _ => return Err(Usage("give exactly one of a points file or --series-dir".into()).into()),
    };
    let flags = Overrides {
        format,
        tolerance: args.tolerance,
        mode: args.mode,
        seed: args.seed,
        trim_up: args.trim.trim_up,
        trim_down: args.trim.trim_down,
    };
    let cfg = resolve(input, flags)?;
    let source = match &cfg.input {
        Input::Points(p) | Input::SeriesDir(p) => p.clone(),
    };
    let dataset = load_dataset(&cfg)?;
    let validation = checked(&dataset, &cfg, args.force, &source)?;
    let forced = validation.as_ref().is_some_and(|v| v.verdict == Verdict::Invalid);
    let fit = fit_usl(&dataset, &cfg.fit)?;

    let n_max = dataset.loads().fold(1.0, f64::max);
    let domain = match args.extrapolate {
        Some(n) if n.is_finite() && n >= 1.0 => n,
        Some(n) => return Err(Usage(format!("--extrapolate must be >= 1, got {n}")).into()),
        None => n_max,
    };
    let curve = ScalabilityCurve::new(fit.params, domain, REPORT_CURVE_SAMPLES)?;
    let intervals = match args.bootstrap {
        Some(replicates) => {
            let boot = BootstrapOptions { replicates, seed: cfg.seed, ..Default::default() };
            Some(bootstrap(&dataset, &cfg.fit, &boot)?)
        }
        None => None,
    };
    let report = Report::new(&fit, validation.as_ref(), &curve, intervals, forced);

    if let Some(dir) = args.plot_dir {
        std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let dense = ScalabilityCurve::new(fit.params, domain, PLOT_CURVE_SAMPLES)?;
        write_curve(&dense, &dir.join("curve.csv"))?;
        io::write_points_file(&dataset, None, &dir.join("points.csv"))?;
    }
    emit(&render(&report, cfg.format)?)?;
    Ok(0)
}

fn write_curve(curve: &ScalabilityCurve, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    writer.write_record(["n", "capacity", "throughput"])?;
    for s in &curve.samples {
        writer.write_record([
            s.n.to_string(),
            s.capacity.to_string(),
            s.throughput.map(|x| x.to_string()).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn cmd_simulate(source: SimulateSource) -> Result<u8> {
    let file = FileConfig::from_env().map_err(|e| Usage(format!("{e:#}")))?;
    let (dataset, common, comment) = match source {
        SimulateSource::Usl { alpha, beta, x1, common } => {
            let seed = common.seed.or(file.seed).unwrap_or(0);
            let p = params(alpha, beta)?.with_x1(x1)?;
            let dataset = generate_synthetic(&p, &common.n.0, common.noise, seed)?;
            let comment = format!("usl alpha={alpha} beta={beta} x1={x1} noise={} seed={seed}", common.noise);
            (dataset, common, comment)
        }
        SimulateSource::Queue { service, think, c, model, common } => {
            let seed = common.seed.or(file.seed).unwrap_or(0);
            let loads = common
                .n
                .0
                .iter()
                .map(|&n| {
                    if n.fract() == 0.0 && (1.0..=u32::MAX as f64).contains(&n) {
                        Ok(n as u32)
                    } else {
                        Err(Usage(format!("queue populations must be positive integers, got {n}")))
                    }
                })
                .collect::<Result<Vec<u32>, Usage>>()?;
            let (model, name) = match model {
                QueueArg::Sync => (QueueModel::SyncBound, "sync"),
                QueueArg::Mva => (QueueModel::Mva, "mva"),
            };
            let exact = queue_dataset(service, think, c, &loads, model)?;
            let dataset = add_noise(&exact, common.noise, seed)?;
            let comment =
                format!("queue model={name} service={service} think={think} c={c} noise={} seed={seed}", common.noise);
            (dataset, common, comment)
        }
    };
    match &common.output {
        Some(path) => io::write_points_file(&dataset, Some(&comment), path)?,
        None => io::write_points(&dataset, Some(&comment), &mut std::io::stdout().lock())?,
    }
    Ok(0)
}
