mod common;

use intconf::io::{encode_dataset, read_dataset_from};
use intconf::metrics::{auroc, prr, Orientation};
use intconf::routing::{sweep, RoutingRecord};
use intconf::{ConfidenceGrid, DatasetManifest, QueryRecord};
use proptest::prelude::*;

fn scored_labels(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    // Scores on a coarse lattice so ties are common.
    prop::collection::vec((0u8..5, any::<bool>()), 2..=max_len)
        .prop_map(|v| v.into_iter().map(|(s, y)| (s as f64 / 4.0, y)).unzip())
        .prop_filter("both classes", |(_, y): &(Vec<f64>, Vec<bool>)| {
            y.iter().any(|&l| l) && y.iter().any(|&l| !l)
        })
}

proptest! {
    #[test]
    fn auroc_matches_pair_counting((scores, labels) in scored_labels(10)) {
        prop_assert_eq!(
            auroc(&scores, &labels, Orientation::HigherIsConfident).unwrap(),
            common::pair_count_auroc(&scores, &labels)
        );
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert_eq!(
            auroc(&scores, &labels, Orientation::HigherIsUncertain).unwrap(),
            common::pair_count_auroc(&neg, &labels)
        );
    }

    #[test]
    fn prr_matches_enumerated_curves((scores, labels) in scored_labels(7)) {
        let got = prr(&scores, &labels, Orientation::HigherIsConfident).unwrap();
        let want = common::enumerated_prr(&scores, &labels);
        prop_assert!((got - want).abs() < 1e-12, "{} vs {}", got, want);
    }

    #[test]
    fn sweep_matches_direct_threshold_evaluation(
        rows in prop::collection::vec((0u8..8, any::<bool>(), any::<bool>(), 0.0f64..2.0, 0.0f64..4.0), 1..=12)
    ) {
        let records: Vec<RoutingRecord> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (c, d, f, cd, cf))| RoutingRecord {
                query_id: format!("r{i}"),
                confidence: c as f64 / 7.0,
                correct_direct: d,
                correct_fallback: f,
                cost_direct: cd,
                cost_fallback: cf,
            })
            .collect();
        let points = sweep(&records).unwrap();
        let mut uniq: Vec<f64> = records.iter().map(|r| r.confidence).collect();
        uniq.sort_by(f64::total_cmp);
        uniq.dedup();
        prop_assert_eq!(points.len(), uniq.len() + 2);

        for (idx, p) in points.iter().enumerate() {
            let (acc, rate, cost) = common::route_at(&records, p.threshold);
            prop_assert_eq!(p.accuracy, acc);
            prop_assert_eq!(p.fallback_rate, rate);
            prop_assert!((p.expected_cost - cost).abs() < 1e-12);
            // Any threshold strictly between the previous one and this one
            // routes identically.
            if idx > 0 && p.threshold.is_finite() {
                let prev = points[idx - 1].threshold;
                let between = if prev.is_finite() { 0.5 * (prev + p.threshold) } else { p.threshold - 1.0 };
                let (acc2, rate2, _) = common::route_at(&records, between);
                prop_assert_eq!((acc2, rate2), (p.accuracy, p.fallback_rate));
            }
        }
    }

    #[test]
    fn dataset_round_trip(
        rows in prop::collection::vec(
            (prop::collection::vec(0.0f64..=1.0, 6), prop::collection::vec(-30.0f64..=0.0, 1..6), prop::option::of(-1.0f64..=1.0), prop::option::of(any::<bool>())),
            0..8,
        )
    ) {
        let manifest = DatasetManifest::new("prop", 2, 3);
        let records: Vec<QueryRecord> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (cells, lp, sim, label))| {
                let mut r = QueryRecord::new(format!("p{i}"), ConfidenceGrid::new(2, 3, cells).unwrap(), lp);
                r.internal_sim = sim;
                r.label = label;
                r
            })
            .collect();
        let bytes = encode_dataset(&manifest, &records).unwrap();
        let (m2, back) = read_dataset_from(&bytes[..]).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            prop_assert_eq!(&a.query_id, &b.query_id);
            prop_assert_eq!(a.label, b.label);
            for (x, y) in a.grid.values().iter().zip(b.grid.values()) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
            for (x, y) in a.token_logprobs.iter().zip(&b.token_logprobs) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
        prop_assert_eq!(encode_dataset(&m2, &back).unwrap(), bytes);
    }
}
