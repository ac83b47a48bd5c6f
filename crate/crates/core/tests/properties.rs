use flowae_core::detector::{calibrate_from_errors, percentile, verdict_for};
use flowae_core::flow::split_items;
use flowae_core::threat::*;
use flowae_core::{
    compute_metrics, fit_normalizer, normalize, smote_oversample, split_benign, ConfusionCounts, FlowRecord,
    FlowTable, Label, NormalizationStats, SmoteConfig,
};
use proptest::prelude::*;

fn table(rows: Vec<Vec<f64>>, labels: Vec<bool>) -> FlowTable {
    let n = rows[0].len();
    let records = rows
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (features, attack))| FlowRecord {
            features,
            label: if attack { Label::Attack } else { Label::Benign },
            category: None,
            original_index: i,
        })
        .collect();
    FlowTable::new(n, records).unwrap()
}

fn rows_strategy(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1e3..1e3f64, n), 2..40)
}

proptest! {
    #[test]
    fn normalization_round_trips_within_range(rows in rows_strategy(3)) {
        let labels = vec![false; rows.len()];
        let t = table(rows, labels);
        let stats = fit_normalizer(&t).unwrap();
        let normed = normalize(&t, &stats).unwrap();
        for (orig, scaled) in t.records().iter().zip(normed.records()) {
            for (j, (&v, &s)) in orig.features.iter().zip(&scaled.features).enumerate() {
                prop_assert!((0.0..=1.0).contains(&s));
                if stats.max[j] > stats.min[j] {
                    let back = stats.unscale(j, s);
                    prop_assert!((back - v).abs() <= 1e-9 * v.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn normalization_is_idempotent_on_unit_range(rows in prop::collection::vec(prop::collection::vec(0.0..=1.0f64, 2), 1..20)) {
        let labels = vec![false; rows.len()];
        let t = table(rows, labels);
        let unit = NormalizationStats { min: vec![0.0; 2], max: vec![1.0; 2] };
        let once = normalize(&t, &unit).unwrap();
        prop_assert_eq!(normalize(&once, &unit).unwrap(), once.clone());
        prop_assert_eq!(once, t);
    }

    #[test]
    fn split_partitions_the_benign_set(labels in prop::collection::vec(any::<bool>(), 1..60), f in 0.05..0.95f64, seed in any::<u64>()) {
        prop_assume!(labels.iter().any(|a| !a));
        let rows = (0..labels.len()).map(|i| vec![i as f64]).collect();
        let t = table(rows, labels.clone());
        let (train, test) = split_benign(&t, f, seed).unwrap();
        let benign = labels.iter().filter(|a| !**a).count();
        prop_assert_eq!(train.len(), (f * benign as f64 + 1e-9).floor() as usize);
        let mut ids: Vec<usize> = train.records().iter().chain(test.records()).map(|r| r.original_index).collect();
        ids.sort_unstable();
        let expected: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
        prop_assert_eq!(ids, expected);
    }

    #[test]
    fn smote_samples_lie_on_neighbor_segments(rows in prop::collection::vec(prop::collection::vec(0.0..=1.0f64, 3), 4..20), extra in 1usize..30, k in 1usize..4, seed in any::<u64>()) {
        let n = rows.len();
        let t = table(rows.clone(), vec![false; n]);
        let out = smote_oversample(&t, &SmoteConfig { k_neighbors: k, target_count: n + extra, seed }).unwrap();
        prop_assert_eq!(&out.records()[..n], t.records());
        for (s, rec) in out.records()[n..].iter().enumerate() {
            let base = &rows[s % n];
            prop_assert!(rec.features.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(on_some_neighbor_segment(&rows, s % n, k, &rec.features));
            prop_assert_eq!(rec.features.len(), base.len());
        }
    }

    #[test]
    fn higher_percentiles_flag_subsets(errors in prop::collection::vec(0.0..10.0f64, 1..50), scores in prop::collection::vec(0.0..12.0f64, 0..50), q1 in 1.0..100.0f64, dq in 0.0..50.0f64) {
        let q2 = (q1 + dq).min(100.0);
        let t1 = calibrate_from_errors(&errors, q1).unwrap();
        let t2 = calibrate_from_errors(&errors, q2).unwrap();
        prop_assert!(t2.threshold >= t1.threshold);
        for &s in &scores {
            if verdict_for(s, &t2) == Label::Attack {
                prop_assert_eq!(verdict_for(s, &t1), Label::Attack);
            }
        }
    }

    #[test]
    fn calibration_self_consistency(errors in prop::collection::vec(0.0..10.0f64, 1..200), q in 50.0..=100.0f64) {
        let th = calibrate_from_errors(&errors, q).unwrap();
        let above = errors.iter().filter(|&&e| verdict_for(e, &th) == Label::Attack).count();
        let allowed = (100.0 - q) / 100.0 * errors.len() as f64 + 1.0;
        prop_assert!(above as f64 <= allowed);
        prop_assert_eq!(th.threshold, percentile(&errors, q).unwrap());
    }

    #[test]
    fn metric_identities(tp in 0u64..10_000, fp in 0u64..10_000, tn in 0u64..10_000, fneg in 0u64..10_000) {
        let m = compute_metrics(&ConfusionCounts { true_positives: tp, false_positives: fp, true_negatives: tn, false_negatives: fneg });
        if let (Some(aa), Some(r)) = (m.anomaly_accuracy, m.recall) {
            prop_assert!((aa - 100.0 * r).abs() <= 1e-12);
        }
        if let (Some(p), Some(r), Some(f1)) = (m.precision, m.recall, m.f1) {
            prop_assert!((f1 - 2.0 * p * r / (p + r)).abs() <= 1e-12);
        }
    }

    #[test]
    fn split_items_is_seed_deterministic(n in 1usize..50, seed in any::<u64>()) {
        let items: Vec<usize> = (0..n).collect();
        prop_assert_eq!(split_items(items.clone(), 0.8, seed).unwrap(), split_items(items, 0.8, seed).unwrap());
    }

    #[test]
    fn brute_force_monotonicity(a in 2u64..40, k in 1u32..12, t in 1e-6..10.0f64, p in 1u64..64) {
        let base = BruteForceParams { alphabet_size: a, password_length: k, guess_time: t, processors: p, elapsed: 0.0 };
        let longer = BruteForceParams { password_length: k + 1, ..base };
        let more = BruteForceParams { processors: p + 1, ..base };
        prop_assert!(brute_force_expected_time(&longer).unwrap() > brute_force_expected_time(&base).unwrap());
        prop_assert!(brute_force_expected_time(&more).unwrap() < brute_force_expected_time(&base).unwrap());
    }

    #[test]
    fn probabilities_stay_in_unit_interval(t in 0.0..1e6f64, rate in 0.0..1e3f64, beta in 0.0..10.0f64, v_total in 1u64..50, v in 0u64..50, elapsed in 0.0..1e9f64) {
        let v = v.min(v_total);
        let r = ReconParams { ip_count: 1, port_count: 1, service_count: 1, scan_rate: rate, detection_scale: beta, time: t, vulnerabilities: v_total, exploitable: v, detection_threshold: None };
        for p in [recon_detect_prob(&r).unwrap(), recon_success_prob(&r).unwrap()] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        let bf = BruteForceParams { alphabet_size: 2, password_length: 8, guess_time: 0.01, processors: 1, elapsed };
        prop_assert!((0.0..=1.0).contains(&brute_force_success_prob(&bf).unwrap()));
    }
}

/// Brute-force neighbor search written independently of the crate's: does
/// `s` equal `x + u·(nn − x)` for some u in [0, 1] and one of the k nearest
/// neighbors of `x` (ties at the k-th distance accepted)?
fn on_some_neighbor_segment(rows: &[Vec<f64>], base: usize, k: usize, s: &[f64]) -> bool {
    let x = &rows[base];
    let dist = |r: &Vec<f64>| r.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let mut d: Vec<f64> = rows.iter().enumerate().filter(|(i, _)| *i != base).map(|(_, r)| dist(r)).collect();
    d.sort_by(f64::total_cmp);
    let kth = d[k - 1];
    rows.iter().enumerate().filter(|(i, r)| *i != base && dist(r) <= kth).any(|(_, nn)| {
        let span: f64 = nn.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
        if span == 0.0 {
            return s.iter().zip(x).all(|(a, b)| (a - b).abs() <= 1e-9);
        }
        let u = s.iter().zip(x).zip(nn).map(|((sv, xv), nv)| (sv - xv) * (nv - xv)).sum::<f64>() / span;
        (-1e-12..=1.0 + 1e-12).contains(&u)
            && s.iter().zip(x).zip(nn).all(|((sv, xv), nv)| (xv + u * (nv - xv) - sv).abs() <= 1e-9)
    })
}
