//! Machine-repairman (M/M/1/N/N) results used to ground the scalability model.
//!
//! `n` requests alternate between thinking for a mean time `z` and queueing at a single
//! server with mean service time `s`. With all requests enqueued at once, the
//! synchronous bound on throughput normalizes to the capacity function: `alpha = s/(s+z)`,
//! and a service time growing linearly with load (constant `c`) adds the `beta` term.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{Dataset, MeasuredPoint};
use crate::model::{capacity_unchecked, UslParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    n: u32,
    s: f64,
    z: f64,
    c: f64,
}

impl QueueParams {
    pub fn new(n: u32, s: f64, z: f64, c: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("queue population must be >= 1".into()));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Domain(format!("service time must be > 0, got {s}")));
        }
        if !(z.is_finite() && z >= 0.0) {
            return Err(Error::Domain(format!("think time must be >= 0, got {z}")));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::Domain(format!("load-dependence constant must be >= 0, got {c}")));
        }
        Ok(Self { n, s, z, c })
    }

    /// Load-independent service.
    pub fn fixed(n: u32, s: f64, z: f64) -> Result<Self> {
        Self::new(n, s, z, 0.0)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn service(&self) -> f64 {
        self.s
    }

    pub fn think(&self) -> f64 {
        self.z
    }

    pub fn load_dependence(&self) -> f64 {
        self.c
    }

    pub fn with_n(self, n: u32) -> Result<Self> {
        Self::new(n, self.s, self.z, self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueSolution {
    /// Throughput.
    pub x: f64,
    /// Mean residence time at the server (queueing plus service).
    pub r: f64,
    /// Mean number of requests at the server.
    pub q: f64,
    /// Mean waiting time, `r - s`.
    pub w: f64,
}

/// Exact mean value analysis of the load-independent repairman model.
pub fn mva_solve(params: &QueueParams) -> Result<QueueSolution> {
    if params.c != 0.0 {
        return Err(Error::Domain("exact MVA requires load-independent service (c = 0)".into()));
    }
    let (s, z) = (params.s, params.z);
    let mut q = 0.0;
    let mut x = 0.0;
    let mut r = 0.0;
    for k in 1..=params.n {
        r = s * (1.0 + q);
        x = k as f64 / (r + z);
        q = x * r;
    }
    Ok(QueueSolution { x, r, q, w: r - s })
}

/// Synchronous throughput bound `N / (R(N) + Z)` with `R(N) = N S + c N (N - 1) S`.
///
/// For `c = 0` this is `N / (N S + Z)`, the lower bound on the exact throughput.
pub fn sync_bound(params: &QueueParams) -> f64 {
    let n = params.n as f64;
    n / (synchronous_residence(n, params) + params.z)
}

fn synchronous_residence(n: f64, params: &QueueParams) -> f64 {
    // the first request's service plus the wait behind the other n - 1,
    // and the load-dependent pairwise term
    params.s + (n - 1.0) * params.s + params.c * n * (n - 1.0) * params.s
}

/// Coefficients implied by a repairman model; `alpha` reaches 1 when `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyncCapacity {
    pub capacity: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl SyncCapacity {
    /// The implied coefficients as [`UslParams`], when `alpha < 1`.
    pub fn params(&self) -> Result<UslParams> {
        UslParams::new(self.alpha, self.beta)
    }
}

/// Synchronous-bound throughput at `n`, relative to `n = 1`, plus the implied coefficients.
pub fn sync_bound_capacity(n: u32, params: &QueueParams) -> Result<SyncCapacity> {
    let at_n = params.with_n(n)?;
    let at_one = params.with_n(1)?;
    let capacity = sync_bound(&at_n) / sync_bound(&at_one);
    let alpha = params.s / (params.s + params.z);
    Ok(SyncCapacity { capacity, alpha, beta: params.c * alpha })
}

/// Model throughput `x1 C(n) (1 + eps)` with Gaussian `eps` of standard deviation `noise`.
///
/// `x1` defaults to 1 when `params` carries none. Negative draws are clamped to zero.
pub fn generate_synthetic(params: &UslParams, n_values: &[f64], noise: f64, seed: u64) -> Result<Dataset> {
    check_noise(noise)?;
    let x1 = params.x1().unwrap_or(1.0);
    let mut points = Vec::with_capacity(n_values.len());
    for &n in n_values {
        if !(n.is_finite() && n >= 1.0) {
            return Err(Error::InvalidPoint(format!("load must be >= 1, got {n}")));
        }
        points.push(MeasuredPoint::new(n, x1 * capacity_unchecked(n, params.alpha(), params.beta())));
    }
    add_noise(&Dataset::new(points)?, noise, seed)
}

fn check_noise(noise: f64) -> Result<()> {
    if noise.is_finite() && noise >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidNoise(noise))
    }
}

/// Multiplies each throughput, in load order, by `1 + eps` with `eps ~ N(0, noise)`,
/// clamping negative results to zero. `noise = 0` returns the data unchanged.
pub fn add_noise(dataset: &Dataset, noise: f64, seed: u64) -> Result<Dataset> {
    check_noise(noise)?;
    if noise == 0.0 {
        return Ok(dataset.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise).map_err(|e| Error::Domain(e.to_string()))?;
    let points = dataset
        .points()
        .iter()
        .map(|p| MeasuredPoint { x: (p.x * (1.0 + normal.sample(&mut rng))).max(0.0), ..*p })
        .collect();
    Dataset::new(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueueModel {
    /// Synchronous bound; normalizes exactly to the capacity function.
    SyncBound,
    /// Exact mean throughput (requires `c = 0`).
    Mva,
}

/// Throughput of a repairman model at each load in `n_values`.
pub fn queue_dataset(s: f64, z: f64, c: f64, n_values: &[u32], model: QueueModel) -> Result<Dataset> {
    let mut points = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let params = QueueParams::new(n, s, z, c)?;
        let x = match model {
            QueueModel::SyncBound => sync_bound(&params),
            QueueModel::Mva => mva_solve(&params)?.x,
        };
        points.push(MeasuredPoint::new(n as f64, x));
    }
    Dataset::new(points)
}
