//! Report structures and their JSON and Markdown renderings.
//!
//! Both renderings are produced from the same struct, and numbers are written with
//! shortest round-trip formatting in both, so they parse to the same values.

use std::fmt::Write as _;

use anyhow::Result;
use serde::Serialize;
use uslkit::fitting::{BootstrapSummary, FitMode, Residual, ScalesFurther};
use uslkit::model::CurveSample;
use uslkit::timeseries::SteadyWindow;
use uslkit::{
    classify_regime, peak_concurrency, practical_peak, FitComparison, FitResult, Peak, Regime, ScalabilityCurve,
    UslParams, ValidationReport,
};

use crate::config::Format;

pub const UNBOUNDED_LABEL: &str = "none (β=0)";

const HINT_CONTENTION: &str = "hint: contention (alpha) dominates; candidates for tuning: locks, serialization points";
const HINT_COHERENCY: &str =
    "hint: coherency (beta) dominates; candidates for tuning: shared-writable data, cache exchange";
const HINT_LINEAR: &str = "hint: no contention or coherency penalty detected over the measured loads";
const HINT_CAVEAT: &str =
    "hint: these are starting points for discussion with the engineers who own the system, not a diagnosis";

pub trait Render: Serialize {
    fn markdown(&self) -> String;
}

pub fn render<T: Render>(value: &T, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(value)? + "\n",
        Format::Markdown => value.markdown(),
    })
}

pub fn peak_label(peak: Peak) -> String {
    match peak {
        Peak::Finite(n) => n.num(),
        Peak::Unbounded => UNBOUNDED_LABEL.to_string(),
    }
}

/// Shortest round-trip text; integral values print without a fractional part.
pub trait Num {
    fn num(&self) -> String;
}

impl Num for f64 {
    fn num(&self) -> String {
        if self.fract() == 0.0 && self.abs() < 1e15 {
            format!("{}", *self as i64)
        } else {
            format!("{self:?}")
        }
    }
}

impl Num for usize {
    fn num(&self) -> String {
        self.to_string()
    }
}

impl Num for u64 {
    fn num(&self) -> String {
        self.to_string()
    }
}

fn opt<T: Num>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.num())
}

fn table(out: &mut String, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}|", vec!["---"; header.len()].join("|"));
    for row in rows {
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
}

/// Interpretation hints from the relative size of the two penalty terms at the largest
/// measured load: `alpha (N - 1)` against `beta N (N - 1)`.
pub fn hints(params: &UslParams, n_max: f64) -> Vec<String> {
    let (alpha, beta) = (params.alpha(), params.beta());
    let first = if alpha == 0.0 && beta == 0.0 {
        HINT_LINEAR
    } else if alpha >= beta * n_max {
        HINT_CONTENTION
    } else {
        HINT_COHERENCY
    };
    vec![first.to_string(), HINT_CAVEAT.to_string()]
}

#[derive(Debug, Serialize)]
pub struct FitSummary {
    pub alpha: f64,
    pub beta: f64,
    pub x1: Option<f64>,
    pub peak: Peak,
    pub peak_label: String,
    pub practical_peak: Option<u64>,
    pub regime: Regime,
    pub mode: FitMode,
    pub points: usize,
    pub sse: f64,
    pub r_squared: f64,
    pub significance_warning: bool,
    pub notice: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub fit: FitSummary,
    /// Absent when the data has no `n = 1` baseline to validate against.
    pub validation: Option<ValidationReport>,
    /// The fit went ahead despite an invalid verdict.
    pub forced: bool,
    pub residuals: Vec<Residual>,
    pub curve_max: f64,
    pub curve: Vec<CurveSample>,
    pub bootstrap: Option<BootstrapSummary>,
    pub hints: Vec<String>,
}

impl Report {
    pub fn new(
        fit: &FitResult,
        validation: Option<&ValidationReport>,
        curve: &ScalabilityCurve,
        bootstrap: Option<BootstrapSummary>,
        forced: bool,
    ) -> Self {
        let n_max = fit.residuals.iter().map(|r| r.n).fold(1.0, f64::max);
        let peak = fit.peak();
        Self {
            fit: FitSummary {
                alpha: fit.params.alpha(),
                beta: fit.params.beta(),
                x1: fit.params.x1(),
                peak,
                peak_label: peak_label(peak),
                practical_peak: fit.practical_peak(),
                regime: fit.regime(),
                mode: fit.mode,
                points: fit.residuals.len(),
                sse: fit.sse,
                r_squared: fit.r_squared,
                significance_warning: fit.significance_warning,
                notice: fit.notice.clone(),
            },
            validation: validation.cloned(),
            forced,
            residuals: fit.residuals.clone(),
            curve_max: curve.domain_max,
            curve: curve.samples.clone(),
            bootstrap,
            hints: hints(&fit.params, n_max),
        }
    }
}

fn mode_label(mode: FitMode) -> &'static str {
    match mode {
        FitMode::NormalizedCapacity => "normalized (x1 = measured X(1))",
        FitMode::RawThroughput3Param => "raw throughput (x1 fitted)",
    }
}

impl Render for Report {
    fn markdown(&self) -> String {
        let f = &self.fit;
        let mut out = String::from("# Scalability fit\n\n");
        table(
            &mut out,
            &["quantity", "value"],
            [
                vec!["alpha (contention)".into(), f.alpha.num()],
                vec!["beta (coherency)".into(), f.beta.num()],
                vec!["x1".into(), opt(f.x1)],
                vec!["N_c".into(), f.peak_label.clone()],
                vec!["practical peak".into(), opt(f.practical_peak)],
                vec!["regime".into(), f.regime.to_string()],
                vec!["mode".into(), mode_label(f.mode).into()],
                vec!["points".into(), f.points.num()],
                vec!["SSE".into(), f.sse.num()],
                vec!["R²".into(), f.r_squared.num()],
            ],
        );
        if f.significance_warning {
            out.push_str(
                "\n> warning: fewer than 6 load levels; the coefficients may not be statistically meaningful\n",
            );
        }
        if let Some(notice) = &f.notice {
            let _ = writeln!(out, "\n> note: {notice}");
        }
        if let Some(b) = &self.bootstrap {
            let _ = writeln!(
                out,
                "\n## Bootstrap ({} of {} replicates, level {})\n",
                b.replicates_used,
                b.replicates_requested,
                b.level.num()
            );
            table(
                &mut out,
                &["coefficient", "low", "high"],
                [
                    vec!["alpha".into(), b.alpha_interval.0.num(), b.alpha_interval.1.num()],
                    vec!["beta".into(), b.beta_interval.0.num(), b.beta_interval.1.num()],
                ],
            );
        }

        out.push_str("\n## Validation\n\n");
        match &self.validation {
            None => out.push_str("skipped: no n = 1 measurement to normalize against\n"),
            Some(v) => {
                let flagged: Vec<String> = v.hard_flagged().map(|r| r.n.num()).collect();
                let _ = writeln!(out, "verdict: {} (tolerance {})", v.verdict, v.tolerance.num());
                if !flagged.is_empty() {
                    let _ = writeln!(out, "\nhard-flagged loads: {}", flagged.join(", "));
                }
                if self.forced {
                    out.push_str("\n> fitted anyway (--force)\n");
                }
            }
        }

        out.push_str("\n## Residuals\n\n");
        table(
            &mut out,
            &["N", "measured", "modeled", "residual"],
            self.residuals.iter().map(|r| vec![r.n.num(), r.measured.num(), r.modeled.num(), r.residual.num()]),
        );

        let _ = writeln!(out, "\n## Model curve (N = 1 to {})\n", self.curve_max.num());
        table(
            &mut out,
            &["N", "C(N)", "X(N)"],
            self.curve.iter().map(|s| vec![s.n.num(), s.capacity.num(), opt(s.throughput)]),
        );

        out.push_str("\n## Interpretation hints\n\n");
        for hint in &self.hints {
            let _ = writeln!(out, "- {hint}");
        }
        out
    }
}

impl Render for ValidationReport {
    fn markdown(&self) -> String {
        let mut out = String::from("# Validation\n\n");
        let _ = writeln!(out, "verdict: {} (tolerance {})\n", self.verdict, self.tolerance.num());
        table(
            &mut out,
            &["N", "C(N)", "E(N)", "flags"],
            self.rows.iter().map(|r| {
                let flags: Vec<String> = r.flags.iter().map(ToString::to_string).collect();
                vec![r.n.num(), r.capacity.num(), r.efficiency.num(), flags.join(", ")]
            }),
        );
        if !self.notes.is_empty() {
            out.push('\n');
            for note in &self.notes {
                let _ = writeln!(out, "- {note}");
            }
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct PeakReport {
    pub alpha: f64,
    pub beta: f64,
    pub peak: Peak,
    pub peak_label: String,
    pub practical_peak: Option<u64>,
    pub regime: Regime,
}

impl PeakReport {
    pub fn new(params: &UslParams) -> Self {
        let peak = peak_concurrency(params);
        Self {
            alpha: params.alpha(),
            beta: params.beta(),
            peak,
            peak_label: peak_label(peak),
            practical_peak: practical_peak(params),
            regime: classify_regime(params),
        }
    }
}

impl Render for PeakReport {
    fn markdown(&self) -> String {
        let mut out = String::from("# Peak concurrency\n\n");
        table(
            &mut out,
            &["quantity", "value"],
            [
                vec!["alpha".into(), self.alpha.num()],
                vec!["beta".into(), self.beta.num()],
                vec!["N_c".into(), self.peak_label.clone()],
                vec!["practical peak".into(), opt(self.practical_peak)],
                vec!["regime".into(), self.regime.to_string()],
            ],
        );
        out
    }
}

#[derive(Debug, Serialize)]
pub struct PredictionRow {
    pub n: f64,
    pub capacity: f64,
    pub efficiency: f64,
    pub throughput: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct PredictionReport {
    pub alpha: f64,
    pub beta: f64,
    pub x1: Option<f64>,
    pub rows: Vec<PredictionRow>,
}

impl Render for PredictionReport {
    fn markdown(&self) -> String {
        let mut out = String::from("# Predicted scalability\n\n");
        let _ = writeln!(out, "alpha {}, beta {}, x1 {}\n", self.alpha.num(), self.beta.num(), opt(self.x1));
        table(
            &mut out,
            &["N", "C(N)", "E(N)", "X(N)"],
            self.rows.iter().map(|r| vec![r.n.num(), r.capacity.num(), r.efficiency.num(), opt(r.throughput)]),
        );
        out
    }
}

#[derive(Debug, Serialize)]
pub struct ComparisonReport {
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub comparison: FitComparison,
}

impl Render for ComparisonReport {
    fn markdown(&self) -> String {
        let c = &self.comparison;
        let mut out = String::from("# Comparison\n\n");
        table(
            &mut out,
            &["", "A", "B", "B - A"],
            [
                vec!["source".into(), self.a.clone(), self.b.clone(), String::new()],
                vec!["alpha".into(), c.alpha_a.num(), c.alpha_b.num(), c.delta_alpha.num()],
                vec!["beta".into(), c.beta_a.num(), c.beta_b.num(), c.delta_beta.num()],
                vec!["N_c".into(), peak_label(c.peak_a), peak_label(c.peak_b), opt(c.delta_peak)],
            ],
        );
        let verdict = match c.verdict {
            ScalesFurther::A => "A scales further",
            ScalesFurther::B => "B scales further",
            ScalesFurther::Tie => "neither scales further",
        };
        let _ = writeln!(out, "\nverdict: {verdict}");
        out
    }
}

#[derive(Debug, Serialize)]
pub struct SteadyRow {
    pub load: f64,
    #[serde(flatten)]
    pub window: SteadyWindow,
}

#[derive(Debug, Serialize)]
pub struct SteadyReport {
    pub windows: Vec<SteadyRow>,
}

impl Render for SteadyReport {
    fn markdown(&self) -> String {
        let mut out = String::from("# Steady-state windows\n\n");
        table(
            &mut out,
            &["N", "start", "end", "samples", "mean X", "cv"],
            self.windows.iter().map(|r| {
                let w = &r.window;
                vec![r.load.num(), w.start.num(), w.end.num(), w.samples.num(), w.mean_throughput.num(), w.cv.num()]
            }),
        );
        out
    }
}
