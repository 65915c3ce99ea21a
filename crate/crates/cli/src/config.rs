//! Analysis settings: defaults, then the `USLKIT_CONFIG` TOML file, then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::Deserialize;
use uslkit::fitting::FitMode;
use uslkit::timeseries::Trim;
use uslkit::validation::DEFAULT_TOLERANCE;
use uslkit::{FitOptions, SteadyConfig};

pub const CONFIG_ENV: &str = "USLKIT_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    #[default]
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    /// Divide by the measured X(1) and fit (alpha, beta).
    Normalized,
    /// Fit x1 together with (alpha, beta) on raw throughput.
    Raw,
}

impl From<ModeArg> for FitMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Normalized => FitMode::NormalizedCapacity,
            ModeArg::Raw => FitMode::RawThroughput3Param,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerFile {
    pub rel_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub restarts: Option<usize>,
    pub beta_max: Option<f64>,
}

/// Contents of the TOML config file; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub format: Option<Format>,
    pub tolerance: Option<f64>,
    pub mode: Option<ModeArg>,
    pub seed: Option<u64>,
    pub trim_up: Option<f64>,
    pub trim_down: Option<f64>,
    #[serde(default)]
    pub optimizer: OptimizerFile,
    pub steady: Option<SteadyConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// The file named by `USLKIT_CONFIG`, or an empty config.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(path) if !path.is_empty() => Self::load(Path::new(&path)),
            _ => Ok(Self::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Points(PathBuf),
    SeriesDir(PathBuf),
}

/// Resolved settings for one analysis run.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub input: Input,
    pub tolerance: f64,
    pub fit: FitOptions,
    pub steady: SteadyConfig,
    pub trim: Option<Trim>,
    pub format: Format,
    pub seed: u64,
}

/// Flag values; `None` defers to the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub format: Option<Format>,
    pub tolerance: Option<f64>,
    pub mode: Option<ModeArg>,
    pub seed: Option<u64>,
    pub trim_up: Option<f64>,
    pub trim_down: Option<f64>,
}

impl AnalysisConfig {
    pub fn resolve(input: Input, file: &FileConfig, flags: &Overrides) -> Result<Self> {
        let mut fit = FitOptions::default();
        let opt = &file.optimizer;
        fit.rel_tol = opt.rel_tol.unwrap_or(fit.rel_tol);
        fit.max_iter = opt.max_iter.unwrap_or(fit.max_iter);
        fit.restarts = opt.restarts.unwrap_or(fit.restarts);
        fit.beta_max = opt.beta_max.unwrap_or(fit.beta_max);
        fit.mode = flags.mode.or(file.mode).map(Into::into);

        let trim_up = flags.trim_up.or(file.trim_up);
        let trim_down = flags.trim_down.or(file.trim_down);
        let trim = (trim_up.is_some() || trim_down.is_some())
            .then(|| Trim { ramp_up: trim_up.unwrap_or(0.0), ramp_down: trim_down.unwrap_or(0.0) });

        let config = Self {
            input,
            tolerance: flags.tolerance.or(file.tolerance).unwrap_or(DEFAULT_TOLERANCE),
            fit,
            steady: file.steady.unwrap_or_default(),
            trim,
            format: flags.format.or(file.format).unwrap_or_default(),
            seed: flags.seed.or(file.seed).unwrap_or(0),
        };
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        let positive = [
            ("tolerance", self.tolerance),
            ("optimizer.rel_tol", self.fit.rel_tol),
            ("optimizer.beta_max", self.fit.beta_max),
            ("steady.slope_tol", self.steady.slope_tol),
            ("steady.cv_max", self.steady.cv_max),
            ("steady.min_fraction", self.steady.min_fraction),
            ("steady.edge_sigma", self.steady.edge_sigma),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                bail!("{name} must be positive, got {value}");
            }
        }
        if self.fit.max_iter == 0 {
            bail!("optimizer.max_iter must be positive");
        }
        if let Some(t) = self.trim {
            if !(t.ramp_up >= 0.0 && t.ramp_down >= 0.0) {
                bail!("trim values must be >= 0, got {} and {}", t.ramp_up, t.ramp_down);
            }
        }
        Ok(())
    }
}
