mod common;

use common::usl_throughput;
use proptest::prelude::*;
use uslkit::fitting::Dataset;
use uslkit::validation::{validate_dataset, Flag, Verdict, DEFAULT_TOLERANCE};

fn loads() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::btree_set(2u32..500, 1..12)
        .prop_map(|set| std::iter::once(1.0).chain(set.into_iter().map(f64::from)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn model_curves_are_clean(alpha in 0.0..0.99f64, beta in 0.0..0.05f64, x1 in 0.1..1e4f64, ns in loads()) {
        let pairs: Vec<(f64, f64)> = ns.iter().map(|&n| (n, usl_throughput(n, alpha, beta, x1))).collect();
        let report = validate_dataset(&Dataset::from_pairs(&pairs).unwrap(), DEFAULT_TOLERANCE).unwrap();
        prop_assert_eq!(report.verdict, Verdict::Clean, "{:?}", report.notes);
    }

    #[test]
    fn hard_flags_match_efficiency(xs in proptest::collection::vec(0.1..1000.0f64, 2..12), tol in 0.0..0.05f64) {
        let pairs: Vec<(f64, f64)> = xs.iter().enumerate().map(|(i, &x)| ((i + 1) as f64, x)).collect();
        let report = validate_dataset(&Dataset::from_pairs(&pairs).unwrap(), tol).unwrap();
        let expected: Vec<f64> = pairs.iter().filter(|(n, x)| x / xs[0] / n > 1.0 + tol).map(|p| p.0).collect();
        let flagged: Vec<f64> = report.hard_flagged().map(|r| r.n).collect();
        prop_assert_eq!(&flagged, &expected);
        prop_assert_eq!(report.verdict == Verdict::Invalid, !expected.is_empty());
    }

    #[test]
    fn power_of_two_scaling_keeps_report(xs in proptest::collection::vec(0.1..1000.0f64, 2..12), e in -20i32..20) {
        let pairs: Vec<(f64, f64)> = xs.iter().enumerate().map(|(i, &x)| ((i + 1) as f64, x)).collect();
        let scaled: Vec<(f64, f64)> = pairs.iter().map(|&(n, x)| (n, x * 2f64.powi(e))).collect();
        let a = validate_dataset(&Dataset::from_pairs(&pairs).unwrap(), DEFAULT_TOLERANCE).unwrap();
        let b = validate_dataset(&Dataset::from_pairs(&scaled).unwrap(), DEFAULT_TOLERANCE).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn repeated_value_is_soft() {
    let d = Dataset::from_pairs(&[(1.0, 10.0), (2.0, 15.0), (4.0, 15.0), (8.0, 12.0)]).unwrap();
    let report = validate_dataset(&d, DEFAULT_TOLERANCE).unwrap();
    assert_eq!(report.verdict, Verdict::Suspect);
    assert_eq!(report.rows[2].flags, vec![Flag::DuplicateThroughput]);
}
