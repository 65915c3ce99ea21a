//! The Universal Scalability Law capacity function and the quantities derived from it.
//!
//! Capacity is the throughput at concurrency `n` relative to the throughput at `n = 1`:
//!
//! ```text
//! C(n) = n / (1 + alpha (n - 1) + beta n (n - 1))
//! ```
//!
//! `alpha` measures contention for shared resources, `beta` the pairwise coherency
//! delay. `beta` is stored with the factor 2 of the pair count already absorbed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fitted or assumed scalability coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct UslParams {
    alpha: f64,
    beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    x1: Option<f64>,
}

#[derive(Deserialize)]
struct RawParams {
    alpha: f64,
    beta: f64,
    #[serde(default)]
    x1: Option<f64>,
}

impl TryFrom<RawParams> for UslParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let params = UslParams::new(raw.alpha, raw.beta)?;
        match raw.x1 {
            Some(x1) => params.with_x1(x1),
            None => Ok(params),
        }
    }
}

impl UslParams {
    /// Coefficients in normalized capacity units (no `x1`).
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && (0.0..1.0).contains(&alpha)) {
            return Err(Error::InvalidParams(format!("alpha must lie in [0, 1), got {alpha}")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidParams(format!("beta must be finite and >= 0, got {beta}")));
        }
        Ok(Self { alpha, beta, x1: None })
    }

    /// Attaches the single-user throughput used to convert capacity into throughput.
    pub fn with_x1(self, x1: f64) -> Result<Self> {
        if !(x1.is_finite() && x1 > 0.0) {
            return Err(Error::InvalidParams(format!("x1 must be finite and > 0, got {x1}")));
        }
        Ok(Self { x1: Some(x1), ..self })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn x1(&self) -> Option<f64> {
        self.x1
    }
}

/// Location of the capacity maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n", rename_all = "snake_case")]
pub enum Peak {
    Finite(f64),
    /// `beta = 0`: capacity increases without a maximum.
    Unbounded,
}

impl Peak {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Peak::Finite(n) => Some(n),
            Peak::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Linear,
    AmdahlSaturating,
    Retrograde,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Linear => "linear",
            Regime::AmdahlSaturating => "amdahl-saturating",
            Regime::Retrograde => "retrograde",
        })
    }
}

fn check_load(n: f64) -> Result<()> {
    if n.is_finite() && n >= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("concurrency must be >= 1, got {n}")))
    }
}

/// Relative capacity `C(n)`; exactly 1 at `n = 1`.
pub fn usl_capacity(n: f64, params: &UslParams) -> Result<f64> {
    check_load(n)?;
    Ok(capacity_unchecked(n, params.alpha, params.beta))
}

#[inline]
pub(crate) fn capacity_unchecked(n: f64, alpha: f64, beta: f64) -> f64 {
    n / (1.0 + alpha * (n - 1.0) + beta * n * (n - 1.0))
}

/// Amdahl's law, the `beta = 0` limit of [`usl_capacity`].
pub fn amdahl_capacity(n: f64, alpha: f64) -> Result<f64> {
    check_load(n)?;
    if !(alpha.is_finite() && (0.0..1.0).contains(&alpha)) {
        return Err(Error::Domain(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    Ok(n / (1.0 + alpha * (n - 1.0)))
}

/// Capacity per unit of concurrency.
pub fn efficiency(n: f64, capacity: f64) -> Result<f64> {
    check_load(n)?;
    Ok(capacity / n)
}

/// `sqrt((1 - alpha) / beta)`, or [`Peak::Unbounded`] when `beta = 0`.
pub fn peak_concurrency(params: &UslParams) -> Peak {
    if params.beta == 0.0 {
        Peak::Unbounded
    } else {
        Peak::Finite(((1.0 - params.alpha) / params.beta).sqrt())
    }
}

/// The integer configuration with the larger capacity among `floor(N_c)` and `ceil(N_c)`.
///
/// Ties go to the smaller `n`. Candidates are clamped to `n >= 1`.
pub fn practical_peak(params: &UslParams) -> Option<u64> {
    let nc = peak_concurrency(params).value()?;
    let lo = nc.floor().max(1.0);
    let hi = nc.ceil().max(1.0);
    let c_lo = capacity_unchecked(lo, params.alpha, params.beta);
    let c_hi = capacity_unchecked(hi, params.alpha, params.beta);
    Some(if c_hi > c_lo { hi as u64 } else { lo as u64 })
}

/// Throughput `C(n) * x1`.
pub fn predict_throughput(n: f64, params: &UslParams) -> Result<f64> {
    let x1 = params.x1.ok_or(Error::MissingNormalization)?;
    Ok(usl_capacity(n, params)? * x1)
}

pub fn classify_regime(params: &UslParams) -> Regime {
    if params.beta > 0.0 {
        Regime::Retrograde
    } else if params.alpha > 0.0 {
        Regime::AmdahlSaturating
    } else {
        Regime::Linear
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub n: f64,
    pub capacity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub throughput: Option<f64>,
}

/// Model samples for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalabilityCurve {
    pub params: UslParams,
    pub domain_max: f64,
    pub samples: Vec<CurveSample>,
}

impl ScalabilityCurve {
    /// Samples every integer load up to `domain_max` when there are at most `max_samples`
    /// of them, otherwise `max_samples` evenly spaced real loads. Always starts at `n = 1`.
    pub fn new(params: UslParams, domain_max: f64, max_samples: usize) -> Result<Self> {
        check_load(domain_max)?;
        if max_samples < 2 {
            return Err(Error::Domain("a curve needs at least 2 samples".into()));
        }
        let loads: Vec<f64> = if domain_max.floor() as usize <= max_samples {
            let mut loads: Vec<f64> = (1..=domain_max.floor() as u64).map(|n| n as f64).collect();
            if domain_max > domain_max.floor() {
                loads.push(domain_max);
            }
            loads
        } else {
            let step = (domain_max - 1.0) / (max_samples - 1) as f64;
            (0..max_samples).map(|i| if i + 1 == max_samples { domain_max } else { 1.0 + step * i as f64 }).collect()
        };
        let samples = loads
            .into_iter()
            .map(|n| {
                let capacity = capacity_unchecked(n, params.alpha, params.beta);
                CurveSample { n, capacity, throughput: params.x1.map(|x1| capacity * x1) }
            })
            .collect();
        Ok(Self { params, domain_max, samples })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(alpha: f64, beta: f64) -> UslParams {
        UslParams::new(alpha, beta).unwrap()
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(usl_capacity(1.0, &p(0.0255, 0.0210)).unwrap(), 1.0);
        assert_eq!(usl_capacity(10.0, &p(0.0, 0.0)).unwrap(), 10.0);
        // 4 / (1 + 0.0255*3 + 0.0210*4*3) = 4 / 1.3285
        assert_abs_diff_eq!(usl_capacity(4.0, &p(0.0255, 0.0210)).unwrap(), 4.0 / 1.3285, epsilon = 1e-12);
        assert_abs_diff_eq!(usl_capacity(4.0, &p(0.0255, 0.0210)).unwrap(), 3.0109, epsilon = 5e-5);
    }

    #[test]
    fn capacity_rejects_load_below_one() {
        assert!(matches!(usl_capacity(0.5, &p(0.1, 0.0)), Err(Error::Domain(_))));
        assert!(usl_capacity(f64::NAN, &p(0.1, 0.0)).is_err());
    }

    #[test]
    fn params_invariants() {
        assert!(UslParams::new(1.0, 0.0).is_err());
        assert!(UslParams::new(-0.01, 0.0).is_err());
        assert!(UslParams::new(0.0, -1e-9).is_err());
        assert!(UslParams::new(0.0, 0.0).unwrap().with_x1(0.0).is_err());
        assert!(UslParams::try_from(RawParams { alpha: 1.5, beta: 0.0, x1: None }).is_err());
        assert!(UslParams::try_from(RawParams { alpha: 0.1, beta: 0.0, x1: Some(-2.0) }).is_err());
    }

    #[test]
    fn amdahl_examples() {
        assert_eq!(amdahl_capacity(16.0, 0.0).unwrap(), 16.0);
        assert_abs_diff_eq!(amdahl_capacity(2.0, 0.5).unwrap(), 2.0 / 1.5, epsilon = 1e-15);
        let big = amdahl_capacity(1e12, 0.1).unwrap();
        assert!(big < 10.0 && big > 9.999_999);
        assert!(amdahl_capacity(2.0, 1.0).is_err());
    }

    #[test]
    fn efficiency_examples() {
        assert_eq!(efficiency(1.0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(efficiency(5.0, 5.67).unwrap(), 1.134, epsilon = 1e-12);
        assert_abs_diff_eq!(efficiency(300.0, 210.0).unwrap(), 0.70, epsilon = 1e-12);
        assert!(efficiency(0.0, 1.0).is_err());
    }

    #[test]
    fn peak_examples() {
        let nc = |a, b| peak_concurrency(&p(a, b)).value().unwrap();
        assert_abs_diff_eq!(nc(0.0255, 0.0210), 6.8121, epsilon = 5e-5);
        assert_abs_diff_eq!(nc(0.0, 2.4e-7), 2041.24, epsilon = 5e-3);
        assert_eq!(peak_concurrency(&p(0.5, 0.0)), Peak::Unbounded);
    }

    #[test]
    fn practical_peak_picks_better_neighbour() {
        // N_c = 6.81; C(7) > C(6) for these coefficients
        let params = p(0.0255, 0.0210);
        let c6 = usl_capacity(6.0, &params).unwrap();
        let c7 = usl_capacity(7.0, &params).unwrap();
        assert_eq!(practical_peak(&params), Some(if c7 > c6 { 7 } else { 6 }));
        assert_eq!(practical_peak(&p(0.2, 0.0)), None);
        // N_c below 1 clamps to 1
        assert_eq!(practical_peak(&p(0.9, 0.5)), Some(1));
    }

    #[test]
    fn predict_examples() {
        let params = p(0.3, 0.01).with_x1(350.0).unwrap();
        assert_eq!(predict_throughput(1.0, &params).unwrap(), 350.0);
        assert_eq!(predict_throughput(10.0, &p(0.0, 0.0).with_x1(5.0).unwrap()).unwrap(), 50.0);
        let v = predict_throughput(4.0, &p(0.0255, 0.0210).with_x1(100.0).unwrap()).unwrap();
        assert_abs_diff_eq!(v, 301.09, epsilon = 5e-3);
        assert_eq!(predict_throughput(2.0, &p(0.1, 0.0)), Err(Error::MissingNormalization));
    }

    #[test]
    fn regime_examples() {
        assert_eq!(classify_regime(&p(0.0, 0.0)), Regime::Linear);
        assert_eq!(classify_regime(&p(0.1, 0.0)), Regime::AmdahlSaturating);
        assert_eq!(classify_regime(&p(0.0988, 0.0209)), Regime::Retrograde);
    }

    #[test]
    fn curve_sampling() {
        let params = p(0.05, 0.001).with_x1(10.0).unwrap();
        let curve = ScalabilityCurve::new(params, 100.0, 500).unwrap();
        assert_eq!(curve.samples.len(), 100);
        assert_eq!(curve.samples[0].capacity, 1.0);
        assert!(curve.samples.windows(2).all(|w| w[0].n < w[1].n));
        let wide = ScalabilityCurve::new(params, 10_000.0, 200).unwrap();
        assert_eq!(wide.samples.len(), 200);
        assert_eq!(wide.samples.last().unwrap().n, 10_000.0);
        assert_eq!(wide.samples[0].n, 1.0);
    }

    proptest! {
        #[test]
        fn identity_at_one(alpha in 0.0..0.999f64, beta in 0.0..10.0f64) {
            prop_assert_eq!(usl_capacity(1.0, &p(alpha, beta)).unwrap(), 1.0);
        }

        #[test]
        fn amdahl_is_bitwise_beta_zero(alpha in 0.0..0.999f64, n in 1.0..1e6f64) {
            prop_assert_eq!(
                usl_capacity(n, &p(alpha, 0.0)).unwrap().to_bits(),
                amdahl_capacity(n, alpha).unwrap().to_bits()
            );
        }

        #[test]
        fn capacity_non_increasing_in_coefficients(
            alpha in 0.0..0.9f64, beta in 0.0..0.1f64, da in 0.0..0.09f64, db in 0.0..0.1f64, n in 1.0001..1e4f64
        ) {
            let base = usl_capacity(n, &p(alpha, beta)).unwrap();
            prop_assert!(usl_capacity(n, &p(alpha + da, beta)).unwrap() <= base);
            prop_assert!(usl_capacity(n, &p(alpha, beta + db)).unwrap() <= base);
        }

        #[test]
        fn peak_decreases_with_coefficients(alpha in 0.0..0.8f64, beta in 1e-6..0.1f64) {
            let nc = peak_concurrency(&p(alpha, beta)).value().unwrap();
            prop_assert!(peak_concurrency(&p(alpha + 0.1, beta)).value().unwrap() < nc);
            prop_assert!(peak_concurrency(&p(alpha, beta * 1.5)).value().unwrap() < nc);
            let at_zero = peak_concurrency(&p(0.0, beta)).value().unwrap();
            prop_assert!((at_zero - beta.powf(-0.5)).abs() <= 1e-14 * at_zero);
        }
    }
}
