mod common;

use common::repairman_brute_force;
use proptest::prelude::*;
use uslkit::model::{amdahl_capacity, usl_capacity};
use uslkit::queueing::{mva_solve, sync_bound, sync_bound_capacity, QueueParams};

#[test]
fn brute_force_two_customers() {
    let (x, q) = repairman_brute_force(2, 1.0, 1.0);
    assert!((x - 0.8).abs() < 1e-12);
    assert!((q - 1.2).abs() < 1e-12);
}

#[test]
fn mva_matches_brute_force_small_populations() {
    let services = [0.25, 0.5, 1.0, 2.0, 3.0];
    let thinks = [0.5, 1.0, 2.5, 4.0, 10.0];
    for n in 1..=6u32 {
        for &s in &services {
            for &z in &thinks {
                let sol = mva_solve(&QueueParams::fixed(n, s, z).unwrap()).unwrap();
                let (x, q) = repairman_brute_force(n as usize, s, z);
                assert!((sol.x - x).abs() <= 1e-10, "n={n} s={s} z={z}: {} vs {x}", sol.x);
                assert!((sol.q - q).abs() <= 1e-10, "n={n} s={s} z={z}: {} vs {q}", sol.q);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn exact_throughput_dominates_sync_bound(n in 1u32..200, s in 0.01..10.0f64, z in 0.0..50.0f64) {
        let q = QueueParams::fixed(n, s, z).unwrap();
        let sol = mva_solve(&q).unwrap();
        let bound = sync_bound(&q);
        prop_assert!(sol.x >= bound * (1.0 - 1e-12));
        if n == 1 {
            prop_assert!((sol.x - bound).abs() <= 1e-12 * bound);
        }
        // Little's law and throughput bounds
        prop_assert!((sol.q - sol.x * sol.r).abs() <= 1e-12 * sol.q.max(1e-300));
        prop_assert!(sol.x <= 1.0 / s * (1.0 + 1e-12));
        prop_assert!(sol.x <= n as f64 / (s + z) * (1.0 + 1e-12));
    }

    #[test]
    fn sync_capacity_is_amdahl(n in 1u32..10_000, s in 1e-3..10.0f64, z in 1e-3..10.0f64) {
        let q = QueueParams::fixed(n, s, z).unwrap();
        let sc = sync_bound_capacity(n, &q).unwrap();
        let direct = n as f64 * (s + z) / (n as f64 * s + z);
        let amdahl = amdahl_capacity(n as f64, s / (s + z)).unwrap();
        prop_assert!(((sc.capacity - amdahl) / amdahl).abs() <= 1e-12);
        prop_assert!(((direct - amdahl) / amdahl).abs() <= 1e-12);
    }

    #[test]
    fn load_dependent_sync_capacity_is_usl(n in 1u32..10_000, s in 1e-3..10.0f64, z in 1e-3..10.0f64, c in 0.0..0.5f64) {
        let q = QueueParams::new(n, s, z, c).unwrap();
        let sc = sync_bound_capacity(n, &q).unwrap();
        let usl = usl_capacity(n as f64, &sc.params().unwrap()).unwrap();
        prop_assert!(((sc.capacity - usl) / usl).abs() <= 1e-12);
    }
}
