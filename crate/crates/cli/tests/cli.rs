use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_modulus-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn files_with(dir: &Path, suffix: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(suffix))
        .collect();
    v.sort();
    v
}

#[test]
fn heaviside_modulus_example() {
    let o = run(&["modulus", "--fn", "heaviside", "--k", "1", "--q", "1", "--alpha", "0", "--beta", "0", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let total: f64 = out.lines().nth(2).unwrap().split_whitespace().last().unwrap().parse().unwrap();
    assert!((total - 0.1).abs() < 2e-3, "{out}");
}

#[test]
fn upsilon_example_prints_square() {
    let o = run(&["rates", "upsilon", "--k", "2", "--q", "1", "--p", "inf", "--alpha", "0", "--beta", "0", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0.01");
}

#[test]
fn verify_kernels_passes() {
    let o = run(&["verify", "--suite", "kernels"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("8 of 8 checks passed"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["modulus", "--k", "1", "--q", "1"]).status.code(), Some(1));
    assert_eq!(run(&["modulus", "--fn", "nope", "--k", "1", "--q", "1", "--delta", "0.1"]).status.code(), Some(1));
    assert_eq!(run(&["verify", "--suite", "everything"]).status.code(), Some(1));
    assert_eq!(run(&["modulus", "--fn", "heaviside", "--k", "1", "--q", "1", "--delta", "0.1", "--plot-data"]).status.code(), Some(1));
    // delta beyond 1/(2k) is a module error
    let o = run(&["modulus", "--fn", "heaviside", "--k", "1", "--q", "1", "--delta", "0.9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("delta"));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn csv_payload_is_deterministic() {
    let args = |dir: &Path| {
        vec![
            "rates".to_string(),
            "sweep".into(),
            "--fn".into(),
            "truncated_power".into(),
            "--k".into(),
            "2".into(),
            "--q".into(),
            "1".into(),
            "--p".into(),
            "2".into(),
            "--delta".into(),
            "0.125,0.0625,0.03125,0.015625,0.0078125".into(),
            "--out".into(),
            dir.display().to_string(),
        ]
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(bin().args(args(a.path())).output().unwrap().status.code(), Some(0));
    let o = bin().args(args(b.path())).env("MODULUS_LAB_WORKERS", "1").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let (ca, cb) = (files_with(a.path(), ".csv"), files_with(b.path(), ".csv"));
    assert_eq!(ca.len(), 1);
    assert_eq!(ca[0].file_name(), cb[0].file_name());
    let text = fs::read_to_string(&ca[0]).unwrap();
    assert_eq!(text, fs::read_to_string(&cb[0]).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("abscissa,value,component,config_hash"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    // 17 significant digits: one before the point, sixteen after
    let mantissa = first[0].split('e').next().unwrap();
    assert_eq!(mantissa.len(), 18, "{mantissa}");
    assert_eq!(files_with(a.path(), ".meta.json").len(), 1);
}

#[test]
fn json_record_is_sorted_and_spells_inf() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "rates", "upsilon", "--k", "2", "--q", "1", "--p", "inf", "--beta", "0.5", "--format", "json", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let files = files_with(dir.path(), ".json");
    assert_eq!(files.len(), 1);
    let text = fs::read_to_string(&files[0]).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["config"]["parameters"]["p"], "inf");
    assert_eq!(v["payload"]["spec"]["p"], "inf");
    assert_eq!(v["payload"]["case"], "square_log");
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(text.find("\"config\"").unwrap() < text.find("\"payload\"").unwrap());
}

#[test]
fn plot_data_and_fit_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = run(&["modulus", "--fn", "heaviside", "--k", "1", "--q", "2", "--out", d, "--plot-data"]);
    assert_eq!(o.status.code(), Some(0));
    let dats = files_with(dir.path(), ".dat");
    assert_eq!(dats.len(), 4);
    let total = dats.iter().find(|p| p.to_string_lossy().ends_with(".total.dat")).unwrap();
    let body = fs::read_to_string(total).unwrap();
    let data: Vec<&str> = body.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 8);
    assert_eq!(data[0].split_whitespace().count(), 2);

    let csv = files_with(dir.path(), ".csv").pop().unwrap();
    let o = run(&["rates", "fit", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let pure = out.lines().find(|l| l.contains("PurePower")).unwrap();
    let exponent: f64 = pure.split("exponent ").nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((exponent - 0.5).abs() < 0.05, "{out}");
}

#[test]
fn catalog_lists_and_rejects() {
    let o = run(&["catalog"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for name in ["heaviside", "truncated_power", "zeta_spline", "oscillating_step", "inverse_power"] {
        assert!(out.contains(name), "{name}");
    }
    let o = run(&["catalog", "--name", "zeta_spline"]);
    assert_eq!(stdout(&o).lines().count(), 2);
    assert_eq!(run(&["catalog", "--name", "nope"]).status.code(), Some(1));
}

#[test]
fn fn_parameters_and_unknown_keys() {
    let o = run(&["approx", "--fn", "truncated_power_origin(k=2)", "--q", "inf", "--n", "4,8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["approx", "--fn", "heaviside(bogus=1)", "--q", "inf", "--n", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["approx", "--fn", "heaviside(k)", "--q", "inf"]).status.code(), Some(1));
}

#[test]
fn bad_worker_cap_is_usage_error() {
    let o = bin().args(["catalog"]).env("MODULUS_LAB_WORKERS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
