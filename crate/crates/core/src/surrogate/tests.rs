use super::*;
use rand::Rng;

/// Separable toy set: healing labels resolve by time alone, with a wide
/// dead zone between t < 1e5 (unhealed) and t > 2e6 (healed).
fn separable_toy(n_per_class: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for _ in 0..n_per_class {
        let sigma = rng.gen_range(0.001..0.1);
        let gamma = rng.gen_range(0.001..0.1);
        rows.push(([sigma, gamma, rng.gen_range(1e4..1e5)], 0));
        let sigma = rng.gen_range(0.001..0.1);
        let gamma = rng.gen_range(0.001..0.1);
        rows.push(([sigma, gamma, rng.gen_range(2e6..3e6)], 1));
    }
    Dataset::from_rows(rows).unwrap()
}

#[test]
fn split_proportions_small() {
    let ds = separable_toy(5, 1);
    assert_eq!(ds.len(), 10);
    let s = split(&ds, 42).unwrap();
    assert_eq!(s.train.len(), 6);
    assert_eq!(s.validation.len(), 2);
    assert_eq!(s.test.len(), 2);
    let mut all: Vec<usize> = s
        .train
        .iter()
        .chain(&s.validation)
        .chain(&s.test)
        .copied()
        .collect();
    all.sort_unstable();
    assert_eq!(all, (0..10).collect::<Vec<_>>());
}

#[test]
fn split_is_seed_deterministic() {
    let ds = separable_toy(50, 2);
    let a = split(&ds, 7).unwrap();
    let b = split(&ds, 7).unwrap();
    assert_eq!(a.train, b.train);
    assert_eq!(a.test, b.test);
    let c = split(&ds, 8).unwrap();
    assert_ne!(a.train, c.train);
}

#[test]
fn split_rejects_tiny_datasets() {
    let ds = separable_toy(3, 3);
    assert!(split(&ds, 0).is_ok());
    let tiny = Dataset {
        x: ds.x[..4].to_vec(),
        y: ds.y[..4].to_vec(),
    };
    assert!(matches!(
        split(&tiny, 0),
        Err(CoreError::InvalidDataset(_))
    ));
}

#[test]
fn split_large_proportions() {
    // 1,000,000 rows cut 600k/200k/200k; index bookkeeping only.
    let n = 1_000_000usize;
    let n_train = (n as f64 * 0.6).floor() as usize;
    let n_val = (n as f64 * 0.8).floor() as usize - n_train;
    assert_eq!(n_train, 600_000);
    assert_eq!(n_val, 200_000);
    assert_eq!(n - n_train - n_val, 200_000);
}

#[test]
fn standardizer_uses_training_rows_only() {
    let ds = separable_toy(100, 4);
    let s = split(&ds, 0).unwrap();
    let train = ds.subset(&s.train);
    let test = ds.subset(&s.test);
    let from_train = Standardizer::fit(&train.x);
    let mut combined = train.x.clone();
    combined.extend_from_slice(&test.x);
    let from_both = Standardizer::fit(&combined);
    // Recomputing with test rows changes the parameters, which is exactly
    // what the training-only rule guards against.
    assert_ne!(from_train, from_both);
}

#[test]
fn all_variants_master_the_toy_set() {
    let ds = separable_toy(100, 5);
    let s = split(&ds, 11).unwrap();
    let train = ds.subset(&s.train);
    let val = ds.subset(&s.validation);
    let test = ds.subset(&s.test);
    let hp = Hyper::default();
    for variant in Variant::ALL {
        let model = fit(variant, &train, &val, &hp).unwrap();
        let m = evaluate(&model, &test).unwrap();
        assert_eq!(
            m.accuracy,
            1.0,
            "{} should reach test accuracy 1.0 on the separable set",
            variant.as_str()
        );
    }
}

#[test]
fn knn_invariant_under_feature_rescaling() {
    let ds = separable_toy(80, 6);
    let s = split(&ds, 3).unwrap();
    let train = ds.subset(&s.train);
    let val = ds.subset(&s.validation);
    let test = ds.subset(&s.test);
    let hp = Hyper::default();
    let base = fit(Variant::Knn, &train, &val, &hp).unwrap();

    // Scale the time feature by 1000 everywhere; standardization absorbs
    // the affine change, so predictions are identical.
    let rescale = |d: &Dataset| Dataset {
        x: d.x.iter().map(|x| [x[0], x[1], x[2] * 1000.0]).collect(),
        y: d.y.clone(),
    };
    let scaled = fit(Variant::Knn, &rescale(&train), &rescale(&val), &hp).unwrap();
    for (x, xs) in test.x.iter().zip(&rescale(&test).x) {
        assert_eq!(base.predict(x).unwrap(), scaled.predict(xs).unwrap());
    }
}

#[test]
fn single_class_training_is_degenerate() {
    let mut ds = separable_toy(10, 7);
    ds.y.iter_mut().for_each(|y| *y = 1);
    let hp = Hyper::default();
    assert!(matches!(
        fit(Variant::LogReg, &ds, &ds, &hp),
        Err(CoreError::DegenerateLabels)
    ));
}

#[test]
fn non_finite_query_rejected() {
    let ds = separable_toy(10, 8);
    let model = fit(Variant::Knn, &ds, &ds, &Hyper::default()).unwrap();
    assert!(matches!(
        model.predict(&[f64::NAN, 0.0, 0.0]),
        Err(CoreError::InvalidInput(_))
    ));
}

#[test]
fn perfect_predictions_score_one() {
    let y = vec![0, 1, 1, 0, 1];
    let m = confusion_metrics(&y, &y);
    assert_eq!(m.accuracy, 1.0);
    assert_eq!(m.precision_weighted, 1.0);
    assert_eq!(m.recall_weighted, 1.0);
    assert_eq!(m.f1_weighted, 1.0);
    assert!(!m.zero_division);
}

#[test]
fn all_one_predictions_on_balanced_set() {
    let y_true = vec![0, 0, 1, 1];
    let y_pred = vec![1, 1, 1, 1];
    let m = confusion_metrics(&y_true, &y_pred);
    assert_eq!(m.accuracy, 0.5);
    assert_eq!(m.per_class[1].precision, 0.5);
    assert_eq!(m.per_class[1].recall, 1.0);
    // Nothing was predicted for class 0.
    assert_eq!(m.per_class[0].precision, 0.0);
    assert!(m.zero_division);
}

#[test]
fn weighted_recall_equals_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let n = rng.gen_range(5..200);
        let y_true: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let y_pred: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let m = confusion_metrics(&y_true, &y_pred);
        assert!((m.recall_weighted - m.accuracy).abs() < 1e-14);
    }
}

#[test]
fn f1_is_harmonic_mean_per_class() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let y_true: Vec<u8> = (0..100).map(|_| rng.gen_range(0..=1)).collect();
    let y_pred: Vec<u8> = (0..100).map(|_| rng.gen_range(0..=1)).collect();
    let m = confusion_metrics(&y_true, &y_pred);
    for c in &m.per_class {
        if c.precision + c.recall > 0.0 {
            let expected = 2.0 * c.precision * c.recall / (c.precision + c.recall);
            assert!((c.f1 - expected).abs() < 1e-14);
        }
    }
}

#[test]
fn persistence_round_trip_predicts_identically() {
    let ds = separable_toy(60, 11);
    let s = split(&ds, 5).unwrap();
    let train = ds.subset(&s.train);
    let val = ds.subset(&s.validation);
    let hp = Hyper {
        mlp_epochs: 10,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for variant in Variant::ALL {
        let model = fit(variant, &train, &val, &hp).unwrap();
        let bytes = persist(&model).unwrap();
        let restored = load(&bytes).unwrap();
        for _ in 0..1000 {
            let probe = [
                rng.gen_range(0.0..0.2),
                rng.gen_range(0.0..0.2),
                rng.gen_range(0.0..4e6),
            ];
            assert_eq!(
                model.predict(&probe).unwrap(),
                restored.predict(&probe).unwrap(),
                "{} round trip",
                variant.as_str()
            );
        }
    }
}

#[test]
fn truncated_payload_is_corrupt() {
    let ds = separable_toy(20, 13);
    let model = fit(Variant::Gnb, &ds, &ds, &Hyper::default()).unwrap();
    let bytes = persist(&model).unwrap();
    let err = load(&bytes[..bytes.len() / 2]);
    assert!(matches!(err, Err(CoreError::CorruptModel { .. })));
}

#[test]
fn tampered_payload_fails_checksum() {
    let ds = separable_toy(20, 14);
    let model = fit(Variant::LinSvm, &ds, &ds, &Hyper::default()).unwrap();
    let text = String::from_utf8(persist(&model).unwrap()).unwrap();
    let tampered = text.replacen("\"b\":", "\"b\": 1e9, \"_\":", 1);
    match load(tampered.as_bytes()) {
        Err(CoreError::CorruptModel { section, .. }) => {
            assert!(section == "checksum" || section == "envelope");
        }
        other => panic!("expected corruption, got {other:?}"),
    }
}

#[test]
fn version_mismatch_names_version() {
    let ds = separable_toy(20, 15);
    let model = fit(Variant::Knn, &ds, &ds, &Hyper::default()).unwrap();
    let text = String::from_utf8(persist(&model).unwrap()).unwrap();
    let bumped = text.replacen("\"version\": 1", "\"version\": 99", 1);
    match load(bumped.as_bytes()) {
        Err(CoreError::CorruptModel { section, detail }) => {
            assert_eq!(section, "version");
            assert!(detail.contains("99"));
        }
        other => panic!("expected version error, got {other:?}"),
    }
}

#[test]
fn fit_evaluate_is_reproducible() {
    let ds = separable_toy(60, 16);
    let s = split(&ds, 21).unwrap();
    let train = ds.subset(&s.train);
    let val = ds.subset(&s.validation);
    let test = ds.subset(&s.test);
    let hp = Hyper {
        mlp_epochs: 8,
        ..Default::default()
    };
    for variant in [Variant::Mlp, Variant::LinSvm] {
        let a = evaluate(&fit(variant, &train, &val, &hp).unwrap(), &test).unwrap();
        let b = evaluate(&fit(variant, &train, &val, &hp).unwrap(), &test).unwrap();
        assert_eq!(a.accuracy, b.accuracy);
        assert_eq!(a.f1_weighted, b.f1_weighted);
    }
}

#[test]
fn csv_round_trip() {
    let out = crate::experiments::DatasetRow {
        sigma: 0.0224,
        gamma: 0.0316,
        t: 50_000.0,
        h: 1,
    };
    let mut buf = Vec::new();
    crate::experiments::write_dataset_csv(&[out], &mut buf).unwrap();
    let ds = Dataset::read_csv(std::io::BufReader::new(&buf[..])).unwrap();
    assert_eq!(ds.len(), 1);
    assert_eq!(ds.x[0], [0.0224, 0.0316, 50_000.0]);
    assert_eq!(ds.y[0], 1);
}
