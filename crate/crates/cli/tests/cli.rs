use std::path::Path;
use std::process::{Command, Output};

use cli::{ExperimentConfig, FitConfig};

fn qexp(args: &[&str], config: Option<&str>, out: &Path) -> Output {
    let dir = out.parent().unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qexp"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(text) = config {
        let p = dir.join("config.json");
        std::fs::write(&p, text).unwrap();
        cmd.arg("--config").arg(p);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        ("fit", r#"{"fit": {"layers": [0, 1]}}"#, "zero layers"),
        ("fit", r#"{"fit": {"targets": ["sinc"]}}"#, "unknown target"),
        ("classify", r#"{"classify": {"problem": "spiral"}}"#, "unknown variant"),
        ("price", r#"{"price": {"bins": 8, "shot": 10}}"#, "unknown field"),
        ("price", "{\n  \"seed\": 1,\n  \"bogus\": 2\n}", "line 3"),
        ("gatecount", r#"{"gatecount": {"bins": [1]}}"#, ">= 2"),
        ("classify", r#"{"classify": {"problem": "tricrown", "lambda": "optimal"}}"#, "binary"),
    ];
    for (cmd, cfg, needle) in cases {
        let o = qexp(&[cmd], Some(cfg), &out);
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(code(&o), 2, "{cfg}: {err}");
        assert!(err.contains(needle), "{cfg}: {err}");
    }
    let o = qexp(&["fit", "--config", "/nonexistent/qexp.json"], None, &out);
    assert_eq!(code(&o), 2);
}

#[test]
fn all_shots_rejected_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = r#"{"price": {"eps": [1.0], "iterations": [0], "shots": 1, "repetitions": 8, "native": "abstract"}}"#;
    let o = qexp(&["price"], Some(cfg), &out);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"seed": 4,
        "price": {"eps": [0.0, 0.002], "iterations": [0, 1], "shots": 500, "repetitions": 3},
        "fit": {"targets": ["relu"], "layers": [1, 2], "points": 20, "train": {"restarts": 2, "max_evals": 60}},
        "classify": {"layers": [1], "n_train": 40, "n_test": 50, "train": {"restarts": 2, "max_evals": 60}}}"#;
    for cmd in ["price", "gatecount", "fit", "classify"] {
        let (a, b) = (dir.path().join(format!("{cmd}_a")), dir.path().join(format!("{cmd}_b")));
        for (out, jobs) in [(&a, "1"), (&b, "3")] {
            let o = qexp(&[cmd, "--jobs", jobs], Some(cfg), out);
            assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
        let rec: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join(format!("{cmd}.json"))).unwrap()).unwrap();
        assert_eq!(rec["seed"], 4);
        assert_eq!(rec["command"], cmd);
        assert!(rec["config"].is_object());
        for f in rec["files"].as_array().unwrap() {
            let f = f.as_str().unwrap();
            assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{cmd}: {f}");
        }
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = r#"{"seed": 4, "fit": {"targets": ["step"], "layers": [1], "points": 10, "train": {"restarts": 1, "max_evals": 20}}}"#;
    let o = qexp(&["fit", "--seed", "9"], Some(cfg), &out);
    assert_eq!(code(&o), 0);
    let rec: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(rec["seed"], 9);
    assert_eq!(rec["config"]["train"]["seed"], 9);
}

#[test]
fn long_format_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = r#"{"fit": {"benchmark": "xy", "targets": ["tanh:relu"], "layers": [2], "points": 15,
        "gradient_audit": true, "train": {"restarts": 1, "max_evals": 40}}}"#;
    let o = qexp(&["fit"], Some(cfg), &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(out.join("fit.csv")).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["seed", "target", "layers", "series", "value"]);
    let series: Vec<String> = r.records().map(|x| x.unwrap()[3].to_string()).collect();
    assert_eq!(series, ["chi2", "evaluations", "gradient_audit"]);
    let curves = std::fs::read_to_string(out.join("fit_curves.csv")).unwrap();
    assert!(curves.contains("model_im") && curves.contains("target_im"));
    let model = std::fs::read_to_string(out.join("fit_models/tanh_relu_k2.json")).unwrap();
    let m = reupload::ReuploadModel::from_json(&model).unwrap();
    assert_eq!(m.layers, 2);

    let o = qexp(&["gatecount"], None, &out);
    assert_eq!(code(&o), 0);
    let rec: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("gatecount.json")).unwrap()).unwrap();
    let best = rec["results"]["crossover"].as_array().unwrap().iter().find(|c| c["native"] == "best").unwrap();
    assert_eq!(best["bins"], 128);
}

#[test]
fn sections_default_and_reject_misplaced_keys() {
    let cfg = ExperimentConfig::parse("{}").unwrap();
    assert!(cfg.fit.is_none());
    assert_eq!(FitConfig::default().layers, vec![1, 2, 3, 4, 5, 6]);
    let err = ExperimentConfig::parse(r#"{"fit": {"problem": "circle"}}"#).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let err = ExperimentConfig::parse(r#"{"fit": {"benchmark": "z", "targets": ["tanh:relu"]}}"#).unwrap().fit.unwrap().validate();
    assert!(err.is_err());
}
