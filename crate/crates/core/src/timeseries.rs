//! Steady-state extraction from load-test throughput time series.
//!
//! A run ramps up, holds a plateau, and ramps down. The throughput for the run's load
//! level is the arithmetic mean over the plateau. The plateau is either given by explicit
//! ramp durations or detected automatically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{Dataset, MeasuredPoint};

pub const MIN_RUN_SAMPLES: usize = 5;
pub const MIN_WINDOW_SAMPLES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trim {
    pub ramp_up: f64,
    pub ramp_down: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSeries {
    load: f64,
    samples: Vec<(f64, f64)>,
    trim: Option<Trim>,
}

impl RunSeries {
    /// `samples` are `(timestamp seconds, throughput)` pairs.
    pub fn new(load: f64, samples: Vec<(f64, f64)>, trim: Option<Trim>) -> Result<Self> {
        if !(load.is_finite() && load >= 1.0) {
            return Err(Error::InvalidSeries(format!("load must be >= 1, got {load}")));
        }
        if samples.len() < MIN_RUN_SAMPLES {
            return Err(Error::InvalidSeries(format!(
                "need at least {MIN_RUN_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        if let Some(&(t, x)) = samples.iter().find(|(t, x)| !t.is_finite() || !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidSeries(format!("bad sample ({t}, {x})")));
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidSeries(format!("timestamps not increasing at t = {}", w[1].0)));
        }
        if let Some(t) = trim {
            if !(t.ramp_up >= 0.0 && t.ramp_down >= 0.0 && t.ramp_up.is_finite() && t.ramp_down.is_finite()) {
                return Err(Error::InvalidSeries(format!("trim must be >= 0, got {t:?}")));
            }
        }
        Ok(Self { load, samples, trim })
    }

    pub fn load(&self) -> f64 {
        self.load
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn trim(&self) -> Option<Trim> {
        self.trim
    }

    pub fn with_trim(mut self, trim: Option<Trim>) -> Result<Self> {
        self.trim = trim;
        Self::new(self.load, self.samples, self.trim)
    }

    fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].0 - self.samples[0].0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyWindow {
    pub start: f64,
    pub end: f64,
    pub mean_throughput: f64,
    /// Population standard deviation over the mean.
    pub cv: f64,
    pub samples: usize,
}

/// Thresholds for automatic plateau detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SteadyConfig {
    /// Largest `|OLS slope| * window duration / window mean`.
    pub slope_tol: f64,
    pub cv_max: f64,
    /// Shortest acceptable window as a fraction of the run duration.
    pub min_fraction: f64,
    /// Edge samples further than this many standard deviations from the window mean are dropped.
    pub edge_sigma: f64,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        Self { slope_tol: 0.01, cv_max: 0.15, min_fraction: 0.3, edge_sigma: 3.0 }
    }
}

/// Running sums over samples, shifted so the first timestamp is zero.
struct Sums {
    t: Vec<f64>,
    x: Vec<f64>,
    tt: Vec<f64>,
    xx: Vec<f64>,
    tx: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct WindowStats {
    mean: f64,
    std: f64,
    slope: f64,
}

impl Sums {
    fn new(samples: &[(f64, f64)]) -> Self {
        let t0 = samples[0].0;
        let mut sums = Sums { t: vec![0.0], x: vec![0.0], tt: vec![0.0], xx: vec![0.0], tx: vec![0.0] };
        for &(t, x) in samples {
            let t = t - t0;
            sums.t.push(sums.t.last().unwrap() + t);
            sums.x.push(sums.x.last().unwrap() + x);
            sums.tt.push(sums.tt.last().unwrap() + t * t);
            sums.xx.push(sums.xx.last().unwrap() + x * x);
            sums.tx.push(sums.tx.last().unwrap() + t * x);
        }
        sums
    }

    /// Statistics over samples `i..=j`.
    fn stats(&self, i: usize, j: usize) -> WindowStats {
        let k = (j - i + 1) as f64;
        let d = |v: &[f64]| v[j + 1] - v[i];
        let (st, sx, stt, sxx, stx) = (d(&self.t), d(&self.x), d(&self.tt), d(&self.xx), d(&self.tx));
        let mean = sx / k;
        let var = (sxx / k - mean * mean).max(0.0);
        let t_var = stt / k - (st / k).powi(2);
        let slope = if t_var > 0.0 { (stx / k - (st / k) * mean) / t_var } else { 0.0 };
        WindowStats { mean, std: var.sqrt(), slope }
    }
}

fn window_from(samples: &[(f64, f64)]) -> SteadyWindow {
    let k = samples.len() as f64;
    let mean = samples.iter().map(|s| s.1).sum::<f64>() / k;
    let var = samples.iter().map(|s| (s.1 - mean).powi(2)).sum::<f64>() / k;
    let cv = if mean > 0.0 { var.sqrt() / mean } else { 0.0 };
    SteadyWindow {
        start: samples[0].0,
        end: samples[samples.len() - 1].0,
        mean_throughput: mean,
        cv,
        samples: samples.len(),
    }
}

fn explicit_window(run: &RunSeries, trim: Trim) -> Result<SteadyWindow> {
    let duration = run.duration();
    if trim.ramp_up + trim.ramp_down >= duration {
        return Err(Error::TrimExceedsRun { ramp_up: trim.ramp_up, ramp_down: trim.ramp_down, duration });
    }
    let start = run.samples[0].0 + trim.ramp_up;
    let end = run.samples[run.samples.len() - 1].0 - trim.ramp_down;
    let inside: Vec<(f64, f64)> = run.samples.iter().copied().filter(|&(t, _)| t >= start && t <= end).collect();
    if inside.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::NoSteadyState(format!("only {} samples between {start} s and {end} s", inside.len())));
    }
    Ok(SteadyWindow { start, end, ..window_from(&inside) })
}

fn qualifies(stats: &WindowStats, duration: f64, cfg: &SteadyConfig) -> bool {
    stats.mean > 0.0
        && stats.std / stats.mean <= cfg.cv_max
        && (stats.slope * duration / stats.mean).abs() <= cfg.slope_tol
}

fn automatic_window(run: &RunSeries, cfg: &SteadyConfig) -> Result<SteadyWindow> {
    let samples = &run.samples;
    let len = samples.len();
    let min_duration = cfg.min_fraction * run.duration();
    let sums = Sums::new(samples);

    // longest qualifying window by duration; earliest start on ties
    let mut best: Option<(usize, usize)> = None;
    for i in 0..len {
        if let Some((bi, bj)) = best {
            if samples[len - 1].0 - samples[i].0 <= samples[bj].0 - samples[bi].0 {
                break;
            }
        }
        let mut j = len - 1;
        while j >= i + MIN_WINDOW_SAMPLES - 1 {
            let duration = samples[j].0 - samples[i].0;
            if duration < min_duration {
                break;
            }
            if let Some((bi, bj)) = best {
                if duration <= samples[bj].0 - samples[bi].0 {
                    break;
                }
            }
            if qualifies(&sums.stats(i, j), duration, cfg) {
                best = Some((i, j));
                break;
            }
            j -= 1;
        }
    }
    let (mut i, mut j) = best.ok_or_else(|| {
        Error::NoSteadyState(format!(
            "no window of at least {:.0}% of the run with cv <= {} and drift <= {}",
            cfg.min_fraction * 100.0,
            cfg.cv_max,
            cfg.slope_tol
        ))
    })?;

    // drop ramp remnants at the edges
    while j + 1 - i > MIN_WINDOW_SAMPLES {
        let stats = sums.stats(i, j);
        // slack absorbs cancellation in the running sums on flat data
        let limit = cfg.edge_sigma * stats.std + 1e-9 * stats.mean.abs();
        let dev_i = (samples[i].1 - stats.mean).abs();
        let dev_j = (samples[j].1 - stats.mean).abs();
        if dev_i <= limit && dev_j <= limit {
            break;
        }
        if dev_i >= dev_j {
            i += 1;
        } else {
            j -= 1;
        }
    }
    if samples[j].0 - samples[i].0 < min_duration {
        return Err(Error::NoSteadyState(format!(
            "plateau shorter than {:.0}% of the run after edge refinement",
            cfg.min_fraction * 100.0
        )));
    }
    Ok(window_from(&samples[i..=j]))
}

/// Plateau window of a run: explicit trim when the run carries one, automatic otherwise.
pub fn extract_steady_state(run: &RunSeries, cfg: &SteadyConfig) -> Result<SteadyWindow> {
    match run.trim {
        Some(trim) => explicit_window(run, trim),
        None => automatic_window(run, cfg),
    }
}

/// One point per run, sorted by load, carrying each window's cv.
pub fn aggregate_runs(runs: &[RunSeries], cfg: &SteadyConfig) -> Result<Dataset> {
    let mut points = Vec::with_capacity(runs.len());
    for run in runs {
        let window = extract_steady_state(run, cfg).map_err(|e| Error::Run { load: run.load, source: Box::new(e) })?;
        points.push(MeasuredPoint { n: run.load, x: window.mean_throughput, cv: Some(window.cv) });
    }
    Dataset::new(points)
}
