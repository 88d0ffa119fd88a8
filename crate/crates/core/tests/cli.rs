use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lipscope::linalg::Matrix;
use lipscope::network::{Activation, Architecture, Network};

fn lipscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lipscope"))
        .args(args)
        .env_remove("LIPSCOPE_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(out)).unwrap()
}

/// Data lines of a CSV document: header first, metadata line dropped.
fn csv_lines(text: &str) -> Vec<&str> {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    lines.collect()
}

#[test]
fn bounds_from_architecture() {
    let v = json(&lipscope(&["bounds", "--arch", "2,300,2", "--sigma-w", "1", "--seed", "3", "--reproducible"]));
    let r = &v["report"];
    assert!((r["rmt_upper"].as_f64().unwrap() - 350.99).abs() < 5e-3);
    assert!((r["rmt_lower"].as_f64().unwrap() - 48.99).abs() < 5e-3);
    assert!(r["exact_lower"].as_f64().unwrap() <= r["exact_upper"].as_f64().unwrap());
    assert_eq!(v["meta"]["master_seed"], 3);
    assert_eq!(v["meta"]["config"]["arch"], "2,300,2");
    assert!(v["meta"].get("timestamp").is_none());
}

#[test]
fn bounds_shorthand_and_csv() {
    let text = stdout(&lipscope(&["bounds", "--arch", "20x3", "--io-dim", "4", "--format", "csv", "--reproducible"]));
    let lines = csv_lines(&text);
    assert_eq!(lines[0], "widths,sigma_w,exact_upper,exact_lower,rmt_upper,rmt_lower");
    assert!(lines[1].starts_with("20x3,1.0000000000000000e0,"));
    assert_eq!(lines.len(), 2);
}

#[test]
fn bounds_from_identity_network_file() {
    let dir = tempfile::tempdir().unwrap();
    let arch = Architecture::new(vec![3, 3, 3], Activation::Relu).unwrap();
    let net = Network::from_parts(arch, vec![Matrix::identity(3), Matrix::identity(3)], vec![vec![0.0; 3]; 2], 1.0, 0.0).unwrap();
    let path = dir.path().join("id.json");
    fs::write(&path, net.to_json()).unwrap();
    let v = json(&lipscope(&["bounds", "--net", path.to_str().unwrap()]));
    assert_eq!(v["report"]["exact_upper"].as_f64().unwrap(), 1.0);
    assert_eq!(v["report"]["exact_lower"].as_f64().unwrap(), 1.0);
    assert!(v["meta"]["timestamp"].is_u64());
}

#[test]
fn malformed_inputs_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"widths\": [2, 3]").unwrap();
    let out = lipscope(&["bounds", "--net", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(lipscope(&["bounds", "--arch", "2,x,2"]).status.code(), Some(1));
    assert_eq!(lipscope(&["sweep", "--widths", "5..1"]).status.code(), Some(1));
    assert_eq!(lipscope(&["stability", "--mode", "maybe"]).status.code(), Some(1));
    assert_eq!(lipscope(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lipscope(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_single_cell_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = out.to_str().unwrap();
    stdout(&lipscope(&["sweep", "--widths", "12", "--depths", "2", "--seeds", "1", "--out", o, "--reproducible"]));
    let text = fs::read_to_string(&out).unwrap();
    let lines = csv_lines(&text);
    assert_eq!(lines[0], "width,depth,seed,exact_upper,exact_lower,rmt_upper,rmt_lower");
    assert_eq!(lines.len(), 2);
    assert!(text.ends_with('\n') && !text.contains('\r'));
    let agg = fs::read_to_string(dir.path().join("sweep_aggregate.csv")).unwrap();
    assert_eq!(csv_lines(&agg).len(), 2);

    let fields: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(&fields[..3], &[12.0, 2.0, 0.0]);
    assert!(fields[4] <= fields[3]);
}

#[test]
fn sweep_to_unwritable_path_fails() {
    let out = lipscope(&["sweep", "--widths", "4", "--depths", "1", "--seeds", "1", "--out", "/nonexistent-dir/x.csv"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn stability_rows_and_failures() {
    let text = stdout(&lipscope(&["stability", "--arch", "300x1", "--arch", "10x2", "--trials", "1", "--reproducible"]));
    let lines = csv_lines(&text);
    assert_eq!(lines[0], "architecture,trials,certified_count,likelihood_percent,threshold");
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let pct: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(pct == 0.0 || pct == 100.0);
    }

    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    fs::write(&a, "[[1.0, 0.0], [0.0, -2.0]]").unwrap();
    let out = lipscope(&["stability", "--a-file", a.to_str().unwrap(), "--trials", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Hurwitz"));
}

#[test]
fn trajectory_single_cell() {
    let text = stdout(&lipscope(&["trajectory", "--widths", "20", "--depths", "2", "--points", "512", "--reproducible"]));
    let lines = csv_lines(&text);
    assert_eq!(lines[0], "width,depth,stretch_ratio,rmt_lower,exact_upper");
    assert_eq!(lines.len(), 2);
    let f: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert!(f[2] <= f[4]);
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read_to_string(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn train_study_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study");
    let args = [
        "train-study", "--hidden", "8,12", "--epochs", "0", "--dataset-size", "100", "--bins", "6", "--reproducible",
        "--out", out.to_str().unwrap(),
    ];
    stdout(&lipscope(&args));
    let names: Vec<String> = read_dir_sorted(&out).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        [
            "histogram_h12_w1.csv", "histogram_h12_w2.csv", "histogram_h8_w1.csv", "histogram_h8_w2.csv",
            "network_h12.json", "network_h8.json", "norm_comparison.csv",
        ]
    );
    let table = fs::read_to_string(out.join("norm_comparison.csv")).unwrap();
    assert_eq!(csv_lines(&table).len(), 5);
    let net = Network::from_json(&fs::read_to_string(out.join("network_h8.json")).unwrap()).unwrap();
    assert_eq!(net.arch().widths(), &[2, 8, 1]);
    assert_eq!(csv_lines(&fs::read_to_string(out.join("histogram_h8_w1.csv")).unwrap()).len(), 7);
}

#[test]
fn train_study_divergence_exits_with_numeric_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = lipscope(&[
        "train-study", "--hidden", "8", "--epochs", "3", "--learning-rate", "1e300", "--dataset-size", "100",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_env_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"arch": "2,5,5,2", "sigma_w": 0.5}"#).unwrap();
    let c = cfg.to_str().unwrap();

    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_lipscope"));
        cmd.args(["bounds", "--config", c, "--reproducible"]).args(extra).env_remove("LIPSCOPE_SEED");
        if let Some(seed) = env {
            cmd.env("LIPSCOPE_SEED", seed);
        }
        json(&cmd.output().unwrap())
    };
    let v = run(&[], None);
    assert_eq!(v["meta"]["config"]["sigma_w"], 0.5);
    assert_eq!(v["meta"]["master_seed"], 0);
    assert_eq!(run(&[], Some("77"))["meta"]["master_seed"], 77);
    assert_eq!(run(&["--seed", "5"], Some("77"))["meta"]["master_seed"], 5);
    let v = run(&["--sigma-w", "2"], None);
    assert_eq!(v["meta"]["config"]["sigma_w"], 2.0);
    assert_eq!(v["report"]["widths"], serde_json::json!([2, 5, 5, 2]));

    fs::write(&cfg, r#"{"arch": "2,5,2", "seed": 9}"#).unwrap();
    assert_eq!(run(&[], Some("77"))["meta"]["master_seed"], 9);
    fs::write(&cfg, r#"{"sigmaw": 1}"#).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lipscope"));
    assert_eq!(cmd.args(["bounds", "--config", c]).output().unwrap().status.code(), Some(1));
}

#[test]
fn thread_count_does_not_change_results() {
    let base = ["sweep", "--widths", "6,9", "--depths", "1..3", "--seeds", "3", "--reproducible"];
    let one = stdout(&lipscope(&[&base[..], &["--threads", "1"]].concat()));
    let four = stdout(&lipscope(&[&base[..], &["--threads", "4"]].concat()));
    assert_eq!(one, four);
    assert_eq!(lipscope(&[&base[..], &["--threads", "0"]].concat()).status.code(), Some(1));
}
