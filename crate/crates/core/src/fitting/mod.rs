//! Constrained least-squares estimation of the scalability coefficients.
//!
//! The loss is the sum of squared throughput residuals. Two modes exist:
//!
//! * normalized capacity: a measurement at `n = 1` fixes `x1`, and `(alpha, beta)` are fitted;
//! * raw throughput: `x1` is estimated too. For fixed `(alpha, beta)` the best `x1` is a linear
//!   least-squares solution, so it is profiled out and the search stays two dimensional.
//!
//! The search is a coarse grid over `alpha in [0, 1)` and `beta in {0} U [beta_min, beta_max]`
//! followed by a box-constrained simplex refinement from the best cell.

mod polish;
mod simplex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{capacity_unchecked, classify_regime, peak_concurrency, practical_peak, Peak, Regime, UslParams};
use simplex::{Bounds, SimplexOptions};

/// Largest representable `alpha` strictly below 1.
const ALPHA_CEILING: f64 = 1.0 - f64::EPSILON;

/// Recommended minimum number of load levels for a meaningful regression.
pub const RECOMMENDED_POINTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredPoint {
    pub n: f64,
    pub x: f64,
    /// Coefficient of variation of the steady-state window the point came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<f64>,
}

impl MeasuredPoint {
    pub fn new(n: f64, x: f64) -> Self {
        Self { n, x, cv: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// A point at `n = 1` exists.
    MeasuredX1,
    FittedX1,
}

/// Throughput observations at distinct load levels, kept sorted by `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    points: Vec<MeasuredPoint>,
}

impl Dataset {
    pub fn new(mut points: Vec<MeasuredPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: points.len() });
        }
        for p in &points {
            if !(p.n.is_finite() && p.n >= 1.0) {
                return Err(Error::InvalidPoint(format!("load must be >= 1, got {}", p.n)));
            }
            if !(p.x.is_finite() && p.x >= 0.0) {
                return Err(Error::InvalidPoint(format!("throughput must be >= 0, got {} at n = {}", p.x, p.n)));
            }
        }
        points.sort_by(|a, b| a.n.total_cmp(&b.n));
        if let Some(w) = points.windows(2).find(|w| w[0].n == w[1].n) {
            return Err(Error::DuplicateLoad(w[0].n));
        }
        Ok(Self { points })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(n, x)| MeasuredPoint::new(n, x)).collect())
    }

    pub fn points(&self) -> &[MeasuredPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn loads(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.n)
    }

    /// Throughput at `n = 1`, if measured.
    pub fn baseline(&self) -> Option<f64> {
        self.points.iter().find(|p| p.n == 1.0).map(|p| p.x)
    }

    pub fn normalization(&self) -> Normalization {
        if self.baseline().is_some() {
            Normalization::MeasuredX1
        } else {
            Normalization::FittedX1
        }
    }

    /// True when there are fewer than [`RECOMMENDED_POINTS`] load levels.
    pub fn significance_warning(&self) -> bool {
        self.points.len() < RECOMMENDED_POINTS
    }

    /// Every throughput multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.points.iter().map(|p| MeasuredPoint { x: p.x * k, ..*p }).collect())
    }
}

/// `C(n) = X(n) / X(1)` for every point.
pub fn capacity_ratios(dataset: &Dataset) -> Result<Vec<(f64, f64)>> {
    let x1 = dataset.baseline().ok_or(Error::MissingBaseline)?;
    if x1 == 0.0 {
        return Err(Error::ZeroBaseline);
    }
    Ok(dataset.points.iter().map(|p| (p.n, if p.n == 1.0 { 1.0 } else { p.x / x1 })).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    NormalizedCapacity,
    #[serde(rename = "raw-throughput-3param")]
    RawThroughput3Param,
}

impl FitMode {
    fn min_points(self) -> usize {
        match self {
            FitMode::NormalizedCapacity => 3,
            FitMode::RawThroughput3Param => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// `None` picks normalized mode when an `n = 1` point exists, raw mode otherwise.
    pub mode: Option<FitMode>,
    pub beta_max: f64,
    /// Smallest non-zero `beta` on the grid.
    pub beta_min: f64,
    pub alpha_steps: usize,
    pub beta_steps: usize,
    /// Relative SSE change below which the refinement stops.
    pub rel_tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            mode: None,
            beta_max: 1.0,
            beta_min: 1e-10,
            alpha_steps: 50,
            beta_steps: 50,
            rel_tol: 1e-10,
            max_iter: 4000,
            restarts: 8,
        }
    }
}

impl FitOptions {
    fn check(&self) -> Result<()> {
        let ok = self.beta_max.is_finite()
            && self.beta_min > 0.0
            && self.beta_min < self.beta_max
            && self.alpha_steps >= 1
            && self.beta_steps >= 2
            && self.rel_tol > 0.0
            && self.max_iter > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid fit options: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub n: f64,
    pub measured: f64,
    pub modeled: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub sse: f64,
    /// `1 - sse / sst`; negative for fits worse than the mean.
    pub r_squared: f64,
    /// Largest `|residual / measured|` over points with non-zero throughput.
    pub max_abs_relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    /// Always carries `x1`.
    pub params: UslParams,
    pub sse: f64,
    pub r_squared: f64,
    pub residuals: Vec<Residual>,
    pub significance_warning: bool,
    pub mode: FitMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
}

impl FitResult {
    /// Builds a result for given coefficients, computing residuals against `dataset`.
    pub fn from_params(params: UslParams, dataset: &Dataset, mode: FitMode) -> Result<Self> {
        let x1 = params.x1().ok_or(Error::MissingNormalization)?;
        let residuals: Vec<Residual> = dataset
            .points
            .iter()
            .map(|p| {
                let modeled = x1 * capacity_unchecked(p.n, params.alpha(), params.beta());
                Residual { n: p.n, measured: p.x, modeled, residual: p.x - modeled }
            })
            .collect();
        let diag = diagnostics(&residuals);
        Ok(Self {
            params,
            sse: diag.sse,
            r_squared: diag.r_squared,
            residuals,
            significance_warning: dataset.significance_warning(),
            mode,
            notice: None,
        })
    }

    pub fn peak(&self) -> Peak {
        peak_concurrency(&self.params)
    }

    pub fn practical_peak(&self) -> Option<u64> {
        practical_peak(&self.params)
    }

    pub fn regime(&self) -> Regime {
        classify_regime(&self.params)
    }
}

fn diagnostics(residuals: &[Residual]) -> FitDiagnostics {
    let count = residuals.len() as f64;
    let mean = residuals.iter().map(|r| r.measured).sum::<f64>() / count;
    let sst: f64 = residuals.iter().map(|r| (r.measured - mean).powi(2)).sum();
    let sse: f64 = residuals.iter().map(|r| r.residual * r.residual).sum();
    let r_squared = if sst == 0.0 {
        if sse == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - sse / sst
    };
    let max_abs_relative_residual =
        residuals.iter().filter(|r| r.measured != 0.0).map(|r| (r.residual / r.measured).abs()).fold(0.0, f64::max);
    FitDiagnostics { sse, r_squared, max_abs_relative_residual }
}

/// Residual diagnostics of `result` against `dataset`.
pub fn evaluate_fit(result: &FitResult, dataset: &Dataset) -> Result<FitDiagnostics> {
    let same_loads =
        result.residuals.len() == dataset.len() && result.residuals.iter().zip(dataset.loads()).all(|(r, n)| r.n == n);
    if !same_loads {
        return Err(Error::MismatchedDataset);
    }
    let x1 = result.params.x1().ok_or(Error::MissingNormalization)?;
    let residuals: Vec<Residual> = dataset
        .points
        .iter()
        .map(|p| {
            let modeled = x1 * capacity_unchecked(p.n, result.params.alpha(), result.params.beta());
            Residual { n: p.n, measured: p.x, modeled, residual: p.x - modeled }
        })
        .collect();
    Ok(diagnostics(&residuals))
}

/// Least-squares problem over `(alpha, beta)` with `x1` fixed or profiled.
struct Problem<'a> {
    ns: &'a [f64],
    xs: &'a [f64],
    fixed_x1: Option<f64>,
}

impl Problem<'_> {
    fn x1(&self, alpha: f64, beta: f64) -> f64 {
        if let Some(x1) = self.fixed_x1 {
            return x1;
        }
        let (num, den) = self.ns.iter().zip(self.xs).fold((0.0, 0.0), |(num, den), (&n, &x)| {
            let c = capacity_unchecked(n, alpha, beta);
            (num + x * c, den + c * c)
        });
        num / den
    }

    fn sse(&self, alpha: f64, beta: f64) -> f64 {
        let x1 = self.x1(alpha, beta);
        self.ns
            .iter()
            .zip(self.xs)
            .map(|(&n, &x)| {
                let r = x - x1 * capacity_unchecked(n, alpha, beta);
                r * r
            })
            .sum()
    }
}

struct Estimate {
    alpha: f64,
    beta: f64,
    x1: f64,
}

fn beta_grid(opts: &FitOptions) -> Vec<f64> {
    let (lo, hi) = (opts.beta_min.ln(), opts.beta_max.ln());
    let steps = opts.beta_steps;
    std::iter::once(0.0).chain((0..steps).map(|i| (lo + (hi - lo) * i as f64 / (steps - 1) as f64).exp())).collect()
}

fn estimate(problem: &Problem<'_>, opts: &FitOptions) -> Estimate {
    let betas = beta_grid(opts);
    let alphas: Vec<f64> = (0..opts.alpha_steps).map(|i| i as f64 / opts.alpha_steps as f64).collect();

    // grid: smaller sse, then smaller beta, then smaller alpha
    let mut best = (f64::INFINITY, 0.0, 0.0, 0usize);
    for (bi, &b) in betas.iter().enumerate() {
        for &a in &alphas {
            let f = problem.sse(a, b);
            if f < best.0 || (f == best.0 && (b, a) < (best.2, best.1)) {
                best = (f, a, b, bi);
            }
        }
    }
    let (_, mut alpha, mut beta, beta_idx) = best;

    let sum_sq: f64 = problem.xs.iter().map(|x| x * x).sum();
    let f_floor = f64::EPSILON * f64::EPSILON * sum_sq;
    let simplex_opts = SimplexOptions { ftol_rel: opts.rel_tol, f_floor, xtol_rel: 1e-12, max_iter: opts.max_iter };

    // The simplex works on (u, v) with alpha = u^2 and beta = v^2. The map is symmetric
    // about zero, so the lower bounds never flatten the simplex; the box clamp keeps
    // alpha < 1 and beta <= beta_max.
    let upper = [ALPHA_CEILING.sqrt(), opts.beta_max.sqrt()];
    let lower = [-upper[0], -upper[1]];
    let bounds = Bounds { lower: &lower, upper: &upper };
    let objective = |v: &[f64]| problem.sse(v[0] * v[0], v[1] * v[1]);

    let next_beta = match beta_idx {
        i if i + 1 < betas.len() => betas[i + 1],
        i => betas[i - 1],
    };
    let mut point = [alpha.sqrt(), beta.sqrt()];
    let mut steps = [(alpha + 1.0 / opts.alpha_steps as f64).sqrt() - point[0], (next_beta.sqrt() - point[1]).abs()];
    let floors = [1e-8, opts.beta_min.sqrt() * 1e-4];
    let mut current = problem.sse(alpha, beta);
    for _ in 0..=opts.restarts {
        let scale = [point[0].abs().max(floors[0]), point[1].abs().max(floors[1])];
        let (vertex, _) = simplex::minimize(&objective, &point, &steps, &scale, bounds, simplex_opts);
        let improved = current - vertex.f > opts.rel_tol * current.abs() + f_floor;
        if vertex.f <= current {
            point = [vertex.x[0].abs(), vertex.x[1].abs()];
            current = vertex.f;
        }
        if !improved {
            break;
        }
        steps = [(0.05 * point[0]).max(1e-4), (0.05 * point[1]).max(opts.beta_min.sqrt())];
    }
    alpha = point[0] * point[0];
    beta = point[1] * point[1];

    let x1 = problem.x1(alpha, beta);
    let polished = polish::Polish {
        ns: problem.ns,
        xs: problem.xs,
        fit_x1: problem.fixed_x1.is_none(),
        upper: [ALPHA_CEILING, opts.beta_max, f64::MAX],
        max_iter: 100,
    }
    .run([alpha, beta, x1]);
    if problem.sse(polished[0], polished[1]) <= problem.sse(alpha, beta) * (1.0 + polish::NOISE_LEVEL) {
        alpha = polished[0];
        beta = polished[1];
    }
    let mut current = problem.sse(alpha, beta);

    // exact boundary values are common optima (linear or Amdahl data)
    for (a, b) in [(0.0, beta), (alpha, 0.0), (0.0, 0.0)] {
        let f = problem.sse(a, b);
        if f <= current {
            alpha = a;
            beta = b;
            current = f;
        }
    }

    Estimate { alpha, beta, x1: problem.x1(alpha, beta) }
}

fn resolve_mode(dataset: &Dataset, opts: &FitOptions) -> Result<(FitMode, Option<String>)> {
    match (opts.mode, dataset.baseline()) {
        (Some(FitMode::NormalizedCapacity), None) => Err(Error::MissingBaseline),
        (Some(FitMode::NormalizedCapacity) | None, Some(0.0)) => Err(Error::ZeroBaseline),
        (Some(mode), _) => Ok((mode, None)),
        (None, Some(_)) => Ok((FitMode::NormalizedCapacity, None)),
        (None, None) => {
            Ok((FitMode::RawThroughput3Param, Some("no n = 1 measurement; x1 fitted as a third parameter".to_string())))
        }
    }
}

/// Fits `(alpha, beta)` and, in raw mode, `x1`.
///
/// Identical inputs always produce bit-identical results.
pub fn fit_usl(dataset: &Dataset, opts: &FitOptions) -> Result<FitResult> {
    opts.check()?;
    if dataset.points.iter().all(|p| p.x == 0.0) {
        return Err(Error::DegenerateData);
    }
    let (mode, notice) = resolve_mode(dataset, opts)?;
    let needed = mode.min_points();
    if dataset.len() < needed {
        return Err(Error::InsufficientData { needed, got: dataset.len() });
    }

    let ns: Vec<f64> = dataset.loads().collect();
    let xs: Vec<f64> = dataset.points.iter().map(|p| p.x).collect();
    let fixed_x1 = match mode {
        FitMode::NormalizedCapacity => dataset.baseline(),
        FitMode::RawThroughput3Param => None,
    };
    let est = estimate(&Problem { ns: &ns, xs: &xs, fixed_x1 }, opts);
    let params = UslParams::new(est.alpha, est.beta)?.with_x1(est.x1)?;
    let mut result = FitResult::from_params(params, dataset, mode)?;
    result.notice = notice;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalesFurther {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitComparison {
    pub alpha_a: f64,
    pub beta_a: f64,
    pub peak_a: Peak,
    pub alpha_b: f64,
    pub beta_b: f64,
    pub peak_b: Peak,
    /// `b - a`.
    pub delta_alpha: f64,
    pub delta_beta: f64,
    /// `b - a` when both peaks are finite.
    pub delta_peak: Option<f64>,
    pub verdict: ScalesFurther,
}

/// Compares two coefficient sets; the one with the larger peak scales further.
pub fn compare_params(a: &UslParams, b: &UslParams) -> FitComparison {
    let (peak_a, peak_b) = (peak_concurrency(a), peak_concurrency(b));
    let (delta_peak, verdict) = match (peak_a, peak_b) {
        (Peak::Finite(pa), Peak::Finite(pb)) => {
            let verdict = match pb.total_cmp(&pa) {
                std::cmp::Ordering::Greater => ScalesFurther::B,
                std::cmp::Ordering::Less => ScalesFurther::A,
                std::cmp::Ordering::Equal => ScalesFurther::Tie,
            };
            (Some(pb - pa), verdict)
        }
        (Peak::Unbounded, Peak::Finite(_)) => (None, ScalesFurther::A),
        (Peak::Finite(_), Peak::Unbounded) => (None, ScalesFurther::B),
        (Peak::Unbounded, Peak::Unbounded) => (None, ScalesFurther::Tie),
    };
    FitComparison {
        alpha_a: a.alpha(),
        beta_a: a.beta(),
        peak_a,
        alpha_b: b.alpha(),
        beta_b: b.beta(),
        peak_b,
        delta_alpha: b.alpha() - a.alpha(),
        delta_beta: b.beta() - a.beta(),
        delta_peak,
        verdict,
    }
}

pub fn compare_fits(a: &FitResult, b: &FitResult) -> FitComparison {
    compare_params(&a.params, &b.params)
}

/// Percentile intervals from resampling points with replacement. Approximate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub replicates_requested: usize,
    pub replicates_used: usize,
    pub level: f64,
    pub alpha_interval: (f64, f64),
    pub beta_interval: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub seed: u64,
    /// Two-sided coverage, e.g. 0.95.
    pub level: f64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self { replicates: 200, seed: 0, level: 0.95 }
    }
}

pub fn bootstrap(dataset: &Dataset, opts: &FitOptions, boot: &BootstrapOptions) -> Result<BootstrapSummary> {
    if !(boot.level > 0.0 && boot.level < 1.0) || boot.replicates == 0 {
        return Err(Error::Domain(format!("invalid bootstrap options: {boot:?}")));
    }
    let base = fit_usl(dataset, opts)?;
    let fixed_x1 = match base.mode {
        FitMode::NormalizedCapacity => base.params.x1(),
        FitMode::RawThroughput3Param => None,
    };
    let needed = base.mode.min_points();
    let mut rng = ChaCha8Rng::seed_from_u64(boot.seed);
    let len = dataset.len();
    let mut alphas = Vec::with_capacity(boot.replicates);
    let mut betas = Vec::with_capacity(boot.replicates);
    for _ in 0..boot.replicates {
        let picks: Vec<&MeasuredPoint> = (0..len).map(|_| &dataset.points[rng.random_range(0..len)]).collect();
        let mut distinct: Vec<f64> = picks.iter().map(|p| p.n).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < needed || picks.iter().all(|p| p.x == 0.0) {
            continue;
        }
        let ns: Vec<f64> = picks.iter().map(|p| p.n).collect();
        let xs: Vec<f64> = picks.iter().map(|p| p.x).collect();
        let est = estimate(&Problem { ns: &ns, xs: &xs, fixed_x1 }, opts);
        alphas.push(est.alpha);
        betas.push(est.beta);
    }
    if alphas.is_empty() {
        return Err(Error::InsufficientData { needed, got: dataset.len() });
    }
    let tail = (1.0 - boot.level) / 2.0;
    Ok(BootstrapSummary {
        replicates_requested: boot.replicates,
        replicates_used: alphas.len(),
        level: boot.level,
        alpha_interval: percentile_interval(&mut alphas, tail),
        beta_interval: percentile_interval(&mut betas, tail),
    })
}

fn percentile_interval(values: &mut [f64], tail: f64) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let idx = (q * (values.len() - 1) as f64).round() as usize;
        values[idx.min(values.len() - 1)]
    };
    (at(tail), at(1.0 - tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn model_data(alpha: f64, beta: f64, x1: f64, ns: &[f64]) -> Dataset {
        let pairs: Vec<(f64, f64)> =
            ns.iter().map(|&n| (n, x1 * n / (1.0 + alpha * (n - 1.0) + beta * n * (n - 1.0)))).collect();
        Dataset::from_pairs(&pairs).unwrap()
    }

    fn rel_err(got: f64, want: f64) -> f64 {
        if want == 0.0 {
            got.abs()
        } else {
            ((got - want) / want).abs()
        }
    }

    #[test]
    fn dataset_invariants() {
        assert!(matches!(Dataset::from_pairs(&[(1.0, 1.0)]), Err(Error::InsufficientData { .. })));
        assert_eq!(Dataset::from_pairs(&[(2.0, 1.0), (2.0, 3.0)]), Err(Error::DuplicateLoad(2.0)));
        assert!(matches!(Dataset::from_pairs(&[(0.5, 1.0), (2.0, 3.0)]), Err(Error::InvalidPoint(_))));
        assert!(matches!(Dataset::from_pairs(&[(1.0, -1.0), (2.0, 3.0)]), Err(Error::InvalidPoint(_))));
        let d = Dataset::from_pairs(&[(4.0, 3.0), (1.0, 1.0), (2.0, 2.0)]).unwrap();
        assert_eq!(d.loads().collect::<Vec<_>>(), vec![1.0, 2.0, 4.0]);
        assert!(d.significance_warning());
        assert_eq!(d.normalization(), Normalization::MeasuredX1);
    }

    #[test]
    fn capacity_ratio_examples() {
        let d = Dataset::from_pairs(&[(1.0, 100.0), (2.0, 180.0)]).unwrap();
        assert_eq!(capacity_ratios(&d).unwrap(), vec![(1.0, 1.0), (2.0, 1.8)]);
        let x0 = 37.0;
        let d = Dataset::from_pairs(&[(1.0, x0), (5.0, 5.67 * x0)]).unwrap();
        assert_abs_diff_eq!(capacity_ratios(&d).unwrap()[1].1, 5.67, epsilon = 1e-12);
        let d = Dataset::from_pairs(&[(1.0, 0.0), (2.0, 3.0)]).unwrap();
        assert_eq!(capacity_ratios(&d), Err(Error::ZeroBaseline));
        let d = Dataset::from_pairs(&[(2.0, 1.0), (3.0, 3.0)]).unwrap();
        assert_eq!(capacity_ratios(&d), Err(Error::MissingBaseline));
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let d = model_data(0.08, 0.02, 1000.0, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
        let fit = fit_usl(&d, &FitOptions::default()).unwrap();
        assert_eq!(fit.mode, FitMode::NormalizedCapacity);
        assert!(rel_err(fit.params.alpha(), 0.08) < 1e-6, "{:?}", fit.params);
        assert!(rel_err(fit.params.beta(), 0.02) < 1e-6, "{:?}", fit.params);
        assert!(fit.sse < 1e-12);
        assert!(!fit.significance_warning);
    }

    #[test]
    fn linear_data_fits_boundary() {
        let pairs: Vec<(f64, f64)> = (1..=8).map(|n| (n as f64, 5.0 * n as f64)).collect();
        let fit = fit_usl(&Dataset::from_pairs(&pairs).unwrap(), &FitOptions::default()).unwrap();
        assert_eq!((fit.params.alpha(), fit.params.beta()), (0.0, 0.0));
        assert_eq!(fit.r_squared, 1.0);
        assert_eq!(fit.regime(), Regime::Linear);
        assert_eq!(fit.peak(), Peak::Unbounded);
    }

    #[test]
    fn superlinear_data_clamps_to_zero() {
        let pairs: Vec<(f64, f64)> = (1..=8).map(|n| (n as f64, 5.0 * (n as f64).powf(1.2))).collect();
        let fit = fit_usl(&Dataset::from_pairs(&pairs).unwrap(), &FitOptions::default()).unwrap();
        assert_eq!((fit.params.alpha(), fit.params.beta()), (0.0, 0.0));
    }

    #[test]
    fn four_points_warn() {
        let d = model_data(0.1, 0.01, 10.0, &[1.0, 2.0, 3.0, 4.0]);
        let fit = fit_usl(&d, &FitOptions::default()).unwrap();
        assert!(fit.significance_warning);
    }

    #[test]
    fn error_paths() {
        let d = model_data(0.1, 0.01, 10.0, &[1.0, 2.0]);
        assert_eq!(fit_usl(&d, &FitOptions::default()).unwrap_err(), Error::InsufficientData { needed: 3, got: 2 });
        let d = model_data(0.1, 0.01, 10.0, &[2.0, 3.0, 4.0]);
        assert_eq!(fit_usl(&d, &FitOptions::default()).unwrap_err(), Error::InsufficientData { needed: 4, got: 3 });
        let d = Dataset::from_pairs(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]).unwrap();
        assert_eq!(fit_usl(&d, &FitOptions::default()).unwrap_err(), Error::DegenerateData);
        let d = model_data(0.1, 0.01, 10.0, &[2.0, 3.0, 4.0, 5.0]);
        let opts = FitOptions { mode: Some(FitMode::NormalizedCapacity), ..Default::default() };
        assert_eq!(fit_usl(&d, &opts).unwrap_err(), Error::MissingBaseline);
    }

    #[test]
    fn raw_mode_without_baseline() {
        let d = model_data(0.05, 0.002, 250.0, &[2.0, 4.0, 8.0, 16.0, 24.0, 32.0]);
        let fit = fit_usl(&d, &FitOptions::default()).unwrap();
        assert_eq!(fit.mode, FitMode::RawThroughput3Param);
        assert!(fit.notice.is_some());
        assert!(rel_err(fit.params.alpha(), 0.05) < 1e-6, "{:?}", fit.params);
        assert!(rel_err(fit.params.beta(), 0.002) < 1e-6, "{:?}", fit.params);
        assert!(rel_err(fit.params.x1().unwrap(), 250.0) < 1e-6, "{:?}", fit.params);
    }

    #[test]
    fn evaluate_fit_matches_independent_accumulation() {
        // memcached-like throughputs; coefficients from the 1.2.8 row
        let pairs = [
            (1.0, 80.0),
            (2.0, 150.0),
            (3.0, 205.0),
            (4.0, 240.0),
            (5.0, 262.0),
            (6.0, 270.0),
            (8.0, 265.0),
            (10.0, 250.0),
            (12.0, 231.0),
        ];
        let d = Dataset::from_pairs(&pairs).unwrap();
        let params = UslParams::new(0.0255, 0.0210).unwrap().with_x1(80.0).unwrap();
        let result = FitResult::from_params(params, &d, FitMode::NormalizedCapacity).unwrap();
        let diag = evaluate_fit(&result, &d).unwrap();
        let mut oracle = 0.0;
        for &(n, x) in &pairs {
            let denom = 1.0 + 0.0255 * (n - 1.0) + 0.0210 * n * (n - 1.0);
            let dev = x - 80.0 * n / denom;
            oracle += dev * dev;
        }
        assert_abs_diff_eq!(diag.sse, oracle, epsilon = 1e-9 * oracle);
        assert_eq!(diag.sse, result.sse);
    }

    #[test]
    fn r_squared_definitions() {
        let d = model_data(0.0, 0.0, 10.0, &[1.0, 2.0, 4.0, 8.0]);
        let perfect = FitResult::from_params(
            UslParams::new(0.0, 0.0).unwrap().with_x1(10.0).unwrap(),
            &d,
            FitMode::NormalizedCapacity,
        )
        .unwrap();
        let diag = evaluate_fit(&perfect, &d).unwrap();
        assert_eq!(diag.sse, 0.0);
        assert_eq!(diag.r_squared, 1.0);

        // a model that predicts the mean everywhere explains nothing
        let residuals: Vec<Residual> = [1.0, 3.0, 5.0]
            .iter()
            .enumerate()
            .map(|(i, &m)| Residual { n: i as f64 + 1.0, measured: m, modeled: 3.0, residual: m - 3.0 })
            .collect();
        assert_eq!(diagnostics(&residuals).r_squared, 0.0);
    }

    #[test]
    fn evaluate_fit_rejects_other_dataset() {
        let d = model_data(0.1, 0.0, 10.0, &[1.0, 2.0, 4.0, 8.0]);
        let other = model_data(0.1, 0.0, 10.0, &[1.0, 2.0, 4.0, 16.0]);
        let fit = fit_usl(&d, &FitOptions::default()).unwrap();
        assert_eq!(evaluate_fit(&fit, &other), Err(Error::MismatchedDataset));
    }

    #[test]
    fn comparison_examples() {
        let v128 = UslParams::new(0.0255, 0.0210).unwrap();
        let v145 = UslParams::new(0.0988, 0.0209).unwrap();
        let c = compare_params(&v128, &v145);
        assert_abs_diff_eq!(c.delta_alpha, 0.0733, epsilon = 1e-12);
        assert_abs_diff_eq!(c.delta_peak.unwrap(), -0.2455, epsilon = 5e-4);
        assert_eq!(c.verdict, ScalesFurther::A);

        let same = compare_params(&v128, &v128);
        assert_eq!((same.delta_alpha, same.delta_beta, same.delta_peak), (0.0, 0.0, Some(0.0)));
        assert_eq!(same.verdict, ScalesFurther::Tie);

        let halved = UslParams::new(0.0255, 0.0105).unwrap();
        let c = compare_params(&v128, &halved);
        let ratio = c.peak_b.value().unwrap() / c.peak_a.value().unwrap();
        assert_abs_diff_eq!(ratio, 2f64.sqrt(), epsilon = 1e-12);
        assert_eq!(c.verdict, ScalesFurther::B);

        let amdahl = UslParams::new(0.2, 0.0).unwrap();
        assert_eq!(compare_params(&v128, &amdahl).verdict, ScalesFurther::B);
        assert_eq!(compare_params(&v128, &amdahl).delta_peak, None);
    }

    #[test]
    fn bootstrap_is_deterministic_and_brackets_truth() {
        let ns: Vec<f64> = (1..=12).map(|n| n as f64).collect();
        let d = model_data(0.05, 0.01, 100.0, &ns);
        let boot = BootstrapOptions { replicates: 50, seed: 7, level: 0.9 };
        let a = bootstrap(&d, &FitOptions::default(), &boot).unwrap();
        let b = bootstrap(&d, &FitOptions::default(), &boot).unwrap();
        assert_eq!(a, b);
        assert!(a.replicates_used > 0);
        assert!(a.alpha_interval.0 <= 0.05 + 1e-6 && a.alpha_interval.1 >= 0.05 - 1e-6);
    }
}
