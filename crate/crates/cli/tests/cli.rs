use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hlmax"))
}

fn quick_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/quick.toml")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn lattice_count_json() {
    let out = run(&["lattice-count", "--dim", "2", "--N", "2", "--q", "2", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["count"], 13);
    let out = run(&["lattice-count", "--dim", "2", "--N", "2", "--q", "inf", "--json"]);
    assert_eq!(json_stdout(&out)["count"], 25);
}

#[test]
fn body_and_multiplier_commands() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("body.json");
    let out = run(&["body", "--body", "cube", "--dim", "3", "--samples", "5000", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert!((v["estimate"].as_f64().unwrap() - 8.0).abs() < 1e-12);
    assert!((v["isotropic_constant"].as_f64().unwrap() - 12f64.sqrt().recip()).abs() < 1e-12);

    let out = run(&[
        "multiplier-check", "--body", "qball:2", "--dim", "2", "--samples", "2000", "--xi-count", "10", "--seed", "3", "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["seed"], 3);
    assert_eq!(v["pass"], true);

    let out = run(&["discrete-multiplier", "--body", "cube", "--dim", "1", "--N", "2", "--xi", "0.25", "--json"]);
    let v = json_stdout(&out);
    let expected = (1.0 + 2.0 * (std::f64::consts::FRAC_PI_2.cos() + std::f64::consts::PI.cos())) / 5.0;
    assert!((v["value"][0].as_f64().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn grid_maximal_and_lemma_check() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("f.csv");
    let rows: String = (0..=40).map(|i| format!("{},{}\n", -2.0 + 0.1 * i as f64, if i == 20 { 1.0 } else { 0.0 })).collect();
    std::fs::write(&input, format!("x,value\n{rows}")).unwrap();
    let out_path = dir.path().join("g.json");
    let out = run(&[
        "grid-maximal", "--dim", "1", "--body", "ball", "--input", input.to_str().unwrap(), "--tgrid", "dyadic:-1:0",
        "--boundary", "zero", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["values"].as_array().unwrap().len(), 41);

    let out = run(&["lemma-check", "--which", "61", "--dim", "2", "--N", "2", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_stdout(&out)["pass"], true);
    let out = run(&["lemma-check", "--which", "chain", "--dim", "1", "--N", "74", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn norm_search_witness() {
    let out = run(&["norm-search", "--body", "cube", "--dim", "1", "--t", "1,2", "--p", "2", "--budget", "20", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_stdout(&out);
    assert_eq!(v["schema"], 1);
    assert!(v["lower_bound"].as_f64().unwrap() > 0.0);
    assert!(!v["witness"].as_array().unwrap().is_empty());
    let out = run(&["norm-search", "--body", "cube", "--dim", "1", "--p", "weak11", "--budget", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn suite_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let out = run(&["suite", "all", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let bundle = dir.path().join("suite-all.json");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&bundle).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["pass"], true);
    assert!(dir.path().join("margins-all.csv").exists());

    let out = run(&["plot-data", "--bundle", bundle.to_str().unwrap(), "--kind", "symbol-sum"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("x,y,std_error,label"));
    for kind in ["lattice-ratio", "multiplier-decay", "ellipsoid-lower-bound", "weak11-trend", "conjectural-constants"] {
        let out = run(&["plot-data", "--bundle", bundle.to_str().unwrap(), "--kind", kind, "--format", "json"]);
        assert_eq!(out.status.code(), Some(0), "{kind}");
        assert_eq!(json_stdout(&out)["schema"], 1);
    }
    let out = run(&["plot-data", "--bundle", bundle.to_str().unwrap(), "--kind", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("symbol-sum"));
}

#[test]
fn suite_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = run(&["suite", "nope", "--out", out_dir]);
    assert_eq!(out.status.code(), Some(2));

    let strict = dir.path().join("strict.toml");
    let base = std::fs::read_to_string(quick_config()).unwrap();
    std::fs::write(&strict, format!("{base}\n[tolerance]\nmc_sigmas = 0.0\n")).unwrap();
    let out = run(&["suite", "multipliers", "--config", strict.to_str().unwrap(), "--out", out_dir]);
    assert_eq!(out.status.code(), Some(1));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "unknown_key = 1\n").unwrap();
    let out = run(&["suite", "bodies", "--config", bad.to_str().unwrap(), "--out", out_dir]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["lattice-count", "--dim", "2"]);
    assert_eq!(out.status.code(), Some(2));
}
