use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use uslkit::timeseries::Trim;
use uslkit::{extract_steady_state, RunSeries, SteadyConfig};

/// Linear ramp up, flat plateau at `level`, linear ramp down, sampled every `dt` seconds.
fn trapezoid(level: f64, up: f64, flat: f64, down: f64, dt: f64) -> Vec<(f64, f64)> {
    let total = up + flat + down;
    let steps = (total / dt).round() as usize;
    (0..=steps)
        .map(|i| {
            let t = i as f64 * dt;
            let x = if t < up {
                level * t / up
            } else if t <= up + flat {
                level
            } else {
                level * (total - t) / down
            };
            (t, x)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn constant_run_is_all_plateau(level in 0.5..1e5f64, len in 5usize..200) {
        let samples: Vec<(f64, f64)> = (0..len).map(|i| (i as f64, level)).collect();
        let run = RunSeries::new(8.0, samples, None).unwrap();
        let w = extract_steady_state(&run, &SteadyConfig::default()).unwrap();
        prop_assert!(((w.mean_throughput - level) / level).abs() <= 1e-12);
        prop_assert!(w.cv <= 1e-12);
        prop_assert_eq!((w.start, w.end), (0.0, (len - 1) as f64));
    }

    #[test]
    fn explicit_trim_ignores_sampling_density(level in 1.0..1e4f64, up in 5u32..60, down in 5u32..60, halvings in 0u32..4) {
        let (up, down) = (f64::from(up), f64::from(down));
        let dt = 0.5f64.powi(halvings as i32);
        let trim = Some(Trim { ramp_up: up, ramp_down: down });
        let run = RunSeries::new(4.0, trapezoid(level, up, 120.0, down, dt), trim).unwrap();
        let w = extract_steady_state(&run, &SteadyConfig::default()).unwrap();
        prop_assert!(((w.mean_throughput - level) / level).abs() <= 1e-12);
        prop_assert_eq!((w.start, w.end), (up, up + 120.0));
    }

    #[test]
    fn noisy_plateau_is_found(level in 10.0..1e4f64, up in 10u32..60, down in 10u32..60, seed in 0u64..1000) {
        let (up, down, flat) = (f64::from(up), f64::from(down), 200.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let samples: Vec<(f64, f64)> = trapezoid(level, up, flat, down, 1.0)
            .into_iter()
            .map(|(t, x)| (t, (x * (1.0 + noise.sample(&mut rng))).max(0.0)))
            .collect();
        let run = RunSeries::new(16.0, samples, None).unwrap();
        let w = extract_steady_state(&run, &SteadyConfig::default()).unwrap();
        prop_assert!(((w.mean_throughput - level) / level).abs() <= 0.01, "mean {} vs {}", w.mean_throughput, level);
        prop_assert!(w.start >= 0.9 * up && w.end <= up + flat + 0.1 * down, "window [{}, {}]", w.start, w.end);
        prop_assert!(w.end - w.start >= 0.8 * flat, "window [{}, {}]", w.start, w.end);
    }
}
