//! Property-based invariants on randomized models, histories, and strategies.

use proptest::prelude::*;

use disclosure::equilibrium::{delta_n, CutoffResult};
use disclosure::histories::History;
use disclosure::model::{random_model, validate_model};
use disclosure::strategy::Strategy;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Validated models have normalized rows and strictly decreasing
    /// likelihood ratios.
    #[test]
    fn validated_models_are_well_formed(seed in 0u64..10_000, l in 2usize..5) {
        let m = random_model(seed, l, 0.01).unwrap();
        let sum_high: f64 = (0..l).map(|i| m.f(disclosure::model::State::High, i)).sum();
        let sum_low: f64 = (0..l).map(|i| m.f(disclosure::model::State::Low, i)).sum();
        prop_assert!((sum_high - 1.0).abs() < 1e-9);
        prop_assert!((sum_low - 1.0).abs() < 1e-9);
        for w in m.ratios().windows(2) {
            prop_assert!(w[0] > w[1]);
        }
        prop_assert!(m.prior() > 0.0 && m.prior() < 1.0);
    }

    /// Cutoffs are strictly decreasing in the signal index, with the
    /// existence conventions ordered consistently.
    #[test]
    fn cutoffs_strictly_decreasing(seed in 0u64..10_000, l in 2usize..5) {
        let m = random_model(seed, l, 0.02).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=l {
            let d = match delta_n(&m, n).unwrap() {
                CutoffResult::AlwaysExists => 1.0,
                CutoffResult::NeverExists => 0.0,
                CutoffResult::Cutoff(d) => {
                    prop_assert!(d > 0.0 && d < 1.0);
                    d
                }
            };
            // Ties are only allowed at the degenerate conventions.
            prop_assert!(d < prev || (d == prev && (d == 0.0 || d == 1.0)));
            prev = d;
        }
    }

    /// No strategy ever discloses a signal count it does not hold, and the
    /// disclosed message is feasible for the post-signal endowment.
    #[test]
    fn disclosure_never_fabricates(
        counts in prop::collection::vec(0u32..6, 2..5),
        signal in 0usize..5,
        j in 0usize..5,
    ) {
        let h = History::new(counts);
        prop_assume!(signal < h.l());
        let endowment = h.plus_signal(signal);
        for strategy in [
            Strategy::ConstantThreshold(j.min(h.l())),
            Strategy::Cap { signal: signal.min(h.l() - 1), limit: Some(2) },
            Strategy::Cap { signal: 0, limit: None },
        ] {
            let out = strategy.disclose(&h, signal, None).unwrap();
            prop_assert!(out.le(&endowment), "{strategy:?}: {out:?} vs {endowment:?}");
        }
    }

    /// Prefix truncation is idempotent and monotone in the cutoff.
    #[test]
    fn prefix_idempotent_and_monotone(
        counts in prop::collection::vec(0u32..7, 2..5),
        j in 0usize..5,
    ) {
        let h = History::new(counts);
        let j = j.min(h.l());
        let once = h.prefix(j).unwrap();
        prop_assert_eq!(once.prefix(j).unwrap(), once.clone());
        prop_assert!(once.le(&h));
        if j < h.l() {
            prop_assert!(once.le(&h.prefix(j + 1).unwrap()));
        }
    }

    /// A model built from explicit rows survives a validate round trip with
    /// the same data up to reindexing.
    #[test]
    fn validate_preserves_mass(
        raw_high in prop::collection::vec(0.05f64..1.0, 3),
        raw_low in prop::collection::vec(0.05f64..1.0, 3),
        prior in 0.1f64..0.9,
    ) {
        let norm = |v: &[f64]| {
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let f_high = norm(&raw_high);
        let f_low = norm(&raw_low);
        if let Ok(m) = validate_model(3, f_high.clone(), f_low.clone(), prior) {
            let mut got_high: Vec<f64> = (0..3).map(|i| m.f(disclosure::model::State::High, i)).collect();
            let mut want_high = f_high.clone();
            got_high.sort_by(f64::total_cmp);
            want_high.sort_by(f64::total_cmp);
            for (a, b) in got_high.iter().zip(&want_high) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            prop_assert_eq!(m.prior(), prior);
        }
    }
}
