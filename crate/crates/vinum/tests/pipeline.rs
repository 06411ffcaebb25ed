use std::collections::HashSet;
use std::path::{Path, PathBuf};

use vinum::config::{ExperimentConfig, ModelSpec, Protocol, SamplerSettings, SamplingOrder};
use vinum::dataio::read_csv;
use vinum::experiment::{run_on, Experiment};
use vinum::persist::ModelFile;
use vinum_core::sampling::SamplingMethod;
use vinum_core::{Matrix, ModelFamily, RawDataset};

fn data_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/winequality-red.csv")
}

fn wine() -> RawDataset {
    read_csv(&data_path()).unwrap()
}

fn quick_config(protocol: Protocol) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json(&format!(
        r#"{{"input": {:?}, "protocol": "unbalanced-default", "seed": 5, "importance_repeats": 3}}"#,
        data_path()
    ))
    .unwrap();
    cfg.protocol = protocol;
    cfg.models = vec![
        ModelSpec::new(ModelFamily::Dtree),
        ModelSpec {
            hyperparameters: Some([("trees".to_string(), 15usize.into())].into()),
            ..ModelSpec::new(ModelFamily::Rforest)
        },
        ModelSpec::new(ModelFamily::Knn),
    ];
    cfg
}

fn report_json(e: &Experiment) -> String {
    serde_json::to_string_pretty(&e.report).unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let raw = wine();
    let cfg = quick_config(Protocol::UnbalancedDefault);
    let a = report_json(&run_on(&cfg, &raw).unwrap());
    let b = report_json(&run_on(&cfg, &raw).unwrap());
    assert_eq!(a, b);
}

#[test]
fn echoed_config_reproduces_the_report() {
    let raw = wine();
    let first = run_on(&quick_config(Protocol::UnbalancedDefault), &raw).unwrap();
    let echo = serde_json::to_string(&first.report.config).unwrap();
    let again = run_on(&ExperimentConfig::from_json(&echo).unwrap(), &raw).unwrap();
    assert_eq!(report_json(&first), report_json(&again));
}

#[test]
fn report_shape() {
    let e = run_on(&quick_config(Protocol::UnbalancedDefault), &wine()).unwrap();
    let r = &e.report;
    assert_eq!(r.data.rows_raw, 1599);
    assert_eq!(r.data.rows_deduplicated, 1359);
    assert_eq!(r.data.train_rows + r.data.test_rows, 1359);
    assert_eq!(r.models.len(), 3);
    let best = r.models.iter().map(|m| m.accuracy).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(r.best_model.accuracy, best);
    assert_eq!(r.importance.family, r.models[r.best_model.index].family);
    assert_eq!(r.importance.report.features.len(), 10);
    let features = r.config.features.as_ref().unwrap();
    assert!(!features.contains(&"residual sugar".to_string()));
    for m in &r.models {
        assert_eq!(m.confusion.total(), r.data.test_rows);
    }
}

/// Raw row indices kept by deduplication, in order.
fn kept_rows(raw: &RawDataset) -> Vec<usize> {
    let mut seen = HashSet::new();
    (0..raw.len())
        .filter(|&i| seen.insert(raw.values().row(i).iter().map(|v| v.to_bits()).collect::<Vec<_>>()))
        .collect()
}

#[test]
fn train_only_mode_never_touches_test_rows() {
    let raw = wine();
    let mut cfg = quick_config(Protocol::BalancedTuned);
    cfg.sampler = Some(SamplerSettings {
        method: SamplingMethod::Smote,
        k_neighbors: 5,
    });
    cfg.sampling_order = SamplingOrder::TrainOnly;
    cfg.k_folds = 3;
    cfg.features = Some(vinum::experiment::default_features(&raw).unwrap());
    cfg.models[2].grid = Some(vinum::config::GridAxes(vec![vinum_core::tuning::Axis::new(
        "k",
        [3usize.into(), 5usize.into()],
    )]));
    let before = run_on(&cfg, &raw).unwrap();
    let test_rows = before.test_rows.clone().expect("split precedes resampling");

    // Shift every feature of every test row (and its duplicates) far away.
    let kept = kept_rows(&raw);
    let quality = raw.column_index("quality").unwrap();
    let targets: HashSet<Vec<u64>> = test_rows
        .iter()
        .map(|&d| raw.values().row(kept[d]).iter().map(|v| v.to_bits()).collect())
        .collect();
    let mut values = raw.values().clone();
    for i in 0..values.rows() {
        let key: Vec<u64> = values.row(i).iter().map(|v| v.to_bits()).collect();
        if targets.contains(&key) {
            for (j, v) in values.row_mut(i).iter_mut().enumerate() {
                if j != quality {
                    *v = *v * 3.0 + 1000.0;
                }
            }
        }
    }
    let perturbed = RawDataset::new(raw.column_names().to_vec(), values).unwrap();
    let after = run_on(&cfg, &perturbed).unwrap();

    assert_eq!(after.test_rows.as_deref(), Some(test_rows.as_slice()));
    assert_eq!(before.standardizers, after.standardizers);
    assert_eq!(before.models, after.models);
    for (a, b) in before.report.models.iter().zip(&after.report.models) {
        assert_eq!(a.tuning, b.tuning);
    }
}

#[test]
fn saved_models_predict_raw_rows_identically() {
    let raw = wine();
    let mut cfg = quick_config(Protocol::BalancedTuned);
    cfg.sampling_order = SamplingOrder::BeforeSplit;
    cfg.models = vec![ModelSpec {
        hyperparameters: Some([("k".to_string(), 7usize.into())].into()),
        ..ModelSpec::new(ModelFamily::Knn)
    }];
    let e = run_on(&cfg, &raw).unwrap();
    let file = &e.model_files()[0];
    let loaded = ModelFile::from_json(&file.to_json().unwrap()).unwrap();
    assert_eq!(&loaded, file);

    let x = loaded.prepare(&raw).unwrap();
    let direct = {
        let names = &e.models[0].feature_names;
        let idx: Vec<usize> = names.iter().map(|n| raw.column_index(n).unwrap()).collect();
        let mut m: Matrix = raw.values().select_cols(&idx);
        for s in &e.standardizers {
            m = s.transform(&m).unwrap();
        }
        e.models[0].predict_batch(&m).unwrap()
    };
    assert_eq!(loaded.model().predict_batch(&x).unwrap(), direct);
}

#[test]
fn model_file_rejects_mismatched_family() {
    let raw = wine();
    let mut cfg = quick_config(Protocol::UnbalancedDefault);
    cfg.models.truncate(1);
    let e = run_on(&cfg, &raw).unwrap();
    let text = e.model_files()[0].to_json().unwrap().replacen("\"family\": \"dtree\"", "\"family\": \"knn\"", 1);
    assert!(ModelFile::from_json(&text).is_err());
}
