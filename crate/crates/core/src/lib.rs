//! Scalability analysis of concurrent systems with the Universal Scalability Law.
//!
//! The crate is organised around the measurement workflow:
//!
//! * [`timeseries`] turns raw load-test throughput series into steady-state points,
//! * [`validation`] checks capacity ratios and efficiencies before any regression,
//! * [`fitting`] estimates the contention (`alpha`) and coherency (`beta`) coefficients,
//! * [`model`] evaluates the capacity function, its peak and regime,
//! * [`queueing`] provides an exact machine-repairman oracle and a synthetic data factory.

pub mod error;
pub mod fitting;
pub mod model;
pub mod queueing;
pub mod timeseries;
pub mod validation;

pub use error::{Error, Result};
pub use fitting::{
    capacity_ratios, compare_fits, evaluate_fit, fit_usl, Dataset, FitComparison, FitMode, FitOptions, FitResult,
    MeasuredPoint, Normalization,
};
pub use model::{
    amdahl_capacity, classify_regime, efficiency, peak_concurrency, practical_peak, predict_throughput, usl_capacity,
    Peak, Regime, ScalabilityCurve, UslParams,
};
pub use queueing::{add_noise, generate_synthetic, mva_solve, sync_bound, sync_bound_capacity, QueueParams};
pub use timeseries::{aggregate_runs, extract_steady_state, RunSeries, SteadyConfig, SteadyWindow};
pub use validation::{monotonicity_profile, validate_dataset, ValidationReport, Verdict};
