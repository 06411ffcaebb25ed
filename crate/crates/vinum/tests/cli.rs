use std::fs;
use std::path::{Path, PathBuf};

use vinum::cli::{run, EXIT_DATA, EXIT_OK, EXIT_STRICT, EXIT_USAGE};

fn data() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data/winequality-red.csv")
        .display()
        .to_string()
}

fn vinum(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("vinum").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("cfg.json");
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn stats_text_and_json() {
    let (code, out, _) = vinum(&["--format", "text", "stats", &data()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("1359 rows\n"));
    assert!(out.contains("alcohol"));
    let (code, out, _) = vinum(&["stats", "--keep-duplicates", &data()]);
    assert_eq!(code, EXIT_OK);
    let rows: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 12);
}

#[test]
fn correlate_csv_puts_alcohol_first() {
    let (code, out, _) = vinum(&["--format", "csv", "correlate", &data()]);
    assert_eq!(code, EXIT_OK);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("rank,feature,correlation"));
    assert_eq!(lines.next(), Some("1,alcohol,0.476"));
    assert_eq!(out.lines().last(), Some("11,residual sugar,0.014"));
}

#[test]
fn distribution_counts() {
    let (code, out, _) = vinum(&["distribution", &data()]);
    assert_eq!(code, EXIT_OK);
    let d: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(d["by_class"], serde_json::json!([63, 1112, 184]));
    assert_eq!(d["by_score"][3], 10);
    assert_eq!(d["by_score"][5], 577);
}

#[test]
fn usage_and_data_errors() {
    assert_eq!(vinum(&[]).0, EXIT_USAGE);
    assert_eq!(vinum(&["stats"]).0, EXIT_USAGE);
    assert_eq!(vinum(&["--format", "xml", "stats", &data()]).0, EXIT_USAGE);
    assert_eq!(vinum(&["--help"]).0, EXIT_OK);
    let (code, _, err) = vinum(&["stats", "/no/such/file.csv"]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("/no/such/file.csv"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a;quality\n1;5\n2;x\n").unwrap();
    let (code, _, err) = vinum(&["stats", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn compare_saves_models_that_predict_and_explain() {
    let dir = tempfile::tempdir().unwrap();
    let models = dir.path().join("models");
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"input": {:?}, "protocol": "unbalanced-default", "seed": 3, "importance_repeats": 2,
                "models": [{{"family": "dtree"}}, {{"family": "knn", "hyperparameters": {{"k": 9}}}}],
                "model_dir": {:?}}}"#,
            data(),
            models
        ),
    );
    let report_path = dir.path().join("report.json");
    let (code, _, err) = vinum(&["--out", report_path.to_str().unwrap(), "compare", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["models"].as_array().unwrap().len(), 2);
    assert!(err.contains("time "));

    let knn = models.join("knn.json");
    let (code, out, _) = vinum(&["--format", "csv", "predict", "--model", knn.to_str().unwrap(), "--input", &data()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 1600);

    let model = models.join("dtree.json");
    let (code, _, err) = vinum(&["importance", "--model", model.to_str().unwrap(), "--test", &data()]);
    assert_eq!(code, EXIT_USAGE, "seed is required: {err}");
    let args = ["--seed", "1", "--format", "csv", "importance", "--model", model.to_str().unwrap(), "--test", &data(), "--repeats", "2"];
    let (code, out, _) = vinum(&args);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().next(), Some("feature,mean_drop"));
    assert_eq!(out.lines().count(), 11);
    assert_eq!(vinum(&args).1, out);
}

#[test]
fn strict_mode_turns_solver_warnings_into_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"input": {:?}, "protocol": "unbalanced-default", "seed": 3, "importance_repeats": 1,
                "models": [{{"family": "svm", "hyperparameters": {{"c": 100, "tol": 1e-9, "max_passes": 1}}}}]}}"#,
            data()
        ),
    );
    let cfg = cfg.to_str().unwrap();
    let (code, _, err) = vinum(&["compare", "--config", cfg]);
    assert_eq!(code, EXIT_OK);
    assert!(err.contains("warning: svm machine"), "{err}");
    assert_eq!(vinum(&["--strict", "compare", "--config", cfg]).0, EXIT_STRICT);
}

#[test]
fn tune_reports_every_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"input": {:?}, "protocol": "balanced-tuned", "seed": 3, "k_folds": 3,
                "models": [{{"family": "knn", "grid": {{"k": [1, 3, 5]}}}}]}}"#,
            data()
        ),
    );
    let (code, out, err) = vinum(&["tune", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let r: serde_json::Value = serde_json::from_str(&out).unwrap();
    let table = r[0]["table"].as_array().unwrap();
    assert_eq!(table.len(), 3);
    let min = table.iter().map(|row| row["error"].as_f64().unwrap()).fold(f64::INFINITY, f64::min);
    assert_eq!(r[0]["best_error"].as_f64().unwrap(), min);
}

#[test]
fn tune_skips_fixed_models() {
    let dir = tempfile::tempdir().unwrap();
    let body = |models: &str| {
        format!(
            r#"{{"input": {:?}, "protocol": "balanced-tuned", "seed": 3, "k_folds": 3, "models": {models}}}"#,
            data()
        )
    };
    let fixed = r#"{"family": "knn", "hyperparameters": {"k": 5}}"#;
    let cfg = write_config(dir.path(), &body(&format!(r#"[{fixed}, {{"family": "knn", "grid": {{"k": [1, 3]}}}}]"#)));
    let (code, out, err) = vinum(&["tune", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let r: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r.as_array().unwrap().len(), 1);

    let cfg = write_config(dir.path(), &body(&format!("[{fixed}]")));
    let (code, _, err) = vinum(&["tune", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("nothing to tune"), "{err}");
}

#[test]
fn invalid_config_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"input": "x.csv", "protocol": "sideways", "seed": 1}"#);
    let (code, _, err) = vinum(&["compare", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("sideways"), "{err}");
}
