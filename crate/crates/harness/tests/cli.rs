use std::path::Path;
use std::process::{Command, Output};

fn fbeta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbeta")).args(args).output().unwrap()
}

fn error_record(out: &Output) -> serde_json::Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rate_writes_three_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = fbeta(&["rate", "--n-grid", "200,400", "--reps", "4", "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["statistic"], "excess");
    for f in ["rate_cells.csv", "rate_fit.json", "rate.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("rate_cells.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        r#"
family = { kind = "constant", value = 0.5 }
estimator = { method = "knn", k = "sqrt" }
n_grid = [100, 200, 400]
replications = 3
seed = 4
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("o");
    let out = fbeta(&["threshold", "--config", s(&cfg), "--n-grid", "150,300", "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("threshold_fit.json")).unwrap()).unwrap();
    assert_eq!(fit["family"], "constant");
    assert_eq!(fit["seed"], 4);
    assert_eq!(fit["cells"].as_array().unwrap().len(), 2);
}

#[test]
fn failures_emit_machine_readable_records() {
    let out = fbeta(&["rate", "--n-grid", "400,200"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["error"]["kind"], "invalid");

    let out = fbeta(&["rate", "--family", "banana"]);
    assert_eq!(error_record(&out)["error"]["kind"], "argument");

    let out = fbeta(&["dkw", "--reps", "10"]);
    assert_eq!(error_record(&out)["error"]["kind"], "argument");

    let out = fbeta(&["predict", "--model", "/nonexistent/model.json", "--data", "x.csv", "--out", "y.csv"]);
    assert_eq!(error_record(&out)["error"]["kind"], "io");

    let out = fbeta(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["error"]["kind"], "usage");
}

#[test]
fn train_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let labeled = dir.path().join("train.csv");
    let mut text = String::from("x_1,y\n");
    for i in 0..200 {
        let x = (i as f64 + 0.5) / 200.0;
        text += &format!("{x},{}\n", u8::from(x > 0.6));
    }
    std::fs::write(&labeled, text).unwrap();
    let points = dir.path().join("points.csv");
    std::fs::write(&points, "x_1\n0.1\n0.5\n0.9\n").unwrap();
    let model = dir.path().join("model.json");
    let out = fbeta(&["train", "--labeled", s(&labeled), "--k", "5", "--out", s(&model)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("model.training.csv").exists());
    let preds = dir.path().join("preds.csv");
    let out = fbeta(&["predict", "--model", s(&model), "--data", s(&points), "--out", s(&preds)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<String> = std::fs::read_to_string(&preds).unwrap().lines().map(String::from).collect();
    assert_eq!(rows[0], "x_1,score,prediction");
    let last: Vec<&str> = rows.iter().map(|r| r.rsplit(',').next().unwrap()).collect();
    assert_eq!(&last[1..], &["0", "0", "1"]);
}

#[test]
fn dkw_and_oracle_suite_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = fbeta(&["dkw", "--n-values", "50,100", "--t-values", "0.1,1.5", "--reps", "100", "--out", s(dir.path())]);
    assert!(out.status.success());
    let table: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dkw.json")).unwrap()).unwrap();
    let rows = table["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().filter(|r| r["t"] == 1.5).all(|r| r["exceedances"] == 0));
    let out = fbeta(&["oracle-suite", "--trials", "30", "--out", s(dir.path())]);
    assert!(out.status.success());
    assert!(dir.path().join("oracle_suite.json").exists());
}
