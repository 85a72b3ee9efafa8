use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rcsbench::samples::SampleSet;
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcsbench"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn circuit(dir: &Path, grid: &str, cycles: usize, seed: u64, out: &str) {
    ok(dir, &["generate", "--grid", grid, "--cycles", &cycles.to_string(), "--seed", &seed.to_string(), "--out", out]);
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    circuit(dir.path(), "3x4", 10, 4, "a.json");
    circuit(dir.path(), "3x4", 10, 4, "b.json");
    circuit(dir.path(), "3x4", 10, 5, "c.json");
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_ne!(read("a.json"), read("c.json"));
    let (ma, mb) = (json(&dir.path().join("a.json.manifest.json")), json(&dir.path().join("b.json.manifest.json")));
    assert_eq!(ma["outputs"][0]["sha256"], mb["outputs"][0]["sha256"]);
}

#[test]
fn deep22_rejects_24_cycles() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generate", "--grid", "3x4", "--kind", "deep22", "--cycles", "24", "--out", "c.json"];
    assert_eq!(code(dir.path(), &args), 2);
    assert!(!dir.path().join("c.json").exists());
    ok(dir.path(), &["generate", "--grid", "3x4", "--kind", "deep22", "--cycles", "22", "--out", "c.json"]);
}

#[test]
fn sixty_qubit_sweep_has_99_gates() {
    let dir = tempfile::tempdir().unwrap();
    let topo = fixtures().join("topology60.json");
    ok(dir.path(), &["generate", "--topology", topo.to_str().unwrap(), "--cycles", "4", "--out", "c.json"]);
    let c = json(&dir.path().join("c.json"));
    assert_eq!(c["n_qubits"], 60);
    let cycles = c["cycles"].as_array().unwrap();
    let patterns: Vec<&str> = cycles.iter().map(|c| c["pattern"].as_str().unwrap()).collect();
    assert_eq!(patterns, ["A", "B", "C", "D"]);
    let gates: usize = cycles.iter().map(|c| c["gates"].as_array().unwrap().len()).sum();
    assert_eq!(gates, 99);
}

#[test]
fn zero_fidelity_samples_are_uniform() {
    let dir = tempfile::tempdir().unwrap();
    circuit(dir.path(), "3x4", 12, 1, "c.json");
    ok(dir.path(), &["sample", "--circuit", "c.json", "--fidelity", "0", "-n", "40000", "--seed", "2", "--out", "s.bin"]);
    let bytes = fs::read(dir.path().join("s.bin")).unwrap();
    let samples = SampleSet::read_binary(&bytes[..], 12).unwrap();
    let mut counts = vec![0usize; 1 << 12];
    for &b in &samples.bitstrings {
        counts[b as usize] += 1;
    }
    let expected = samples.len() as f64 / counts.len() as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = (counts.len() - 1) as f64;
    assert!((chi2 - dof).abs() < 5.0 * (2.0 * dof).sqrt(), "chi2 {chi2} for {dof} dof");
}

#[test]
fn ideal_samples_score_one() {
    let dir = tempfile::tempdir().unwrap();
    circuit(dir.path(), "3x4", 12, 3, "c.json");
    ok(dir.path(), &["sample", "--circuit", "c.json", "--model", "ideal", "-n", "20000", "--seed", "4", "--out", "s.bin"]);
    let args = ["analyze", "--circuit", "c.json", "--samples", "s.bin", "--bootstrap", "100", "--out", "a.json"];
    ok(dir.path(), &args);
    let a = json(&dir.path().join("a.json"));
    let (f, sigma) = (a["fidelity"].as_f64().unwrap(), a["sigma"].as_f64().unwrap());
    let ideal = a["ideal_xeb"].as_f64().unwrap();
    assert!((f - ideal).abs() < 3.0 * sigma, "F {f} vs {ideal} ± {sigma}");
    assert!((f - 1.0).abs() < 3.0 * sigma + (ideal - 1.0).abs(), "F {f} ± {sigma}");
    assert!(a["ks_at_estimate"]["p_value"].as_f64().unwrap() > 1e-3);
    assert!(a["ks_at_zero"]["p_value"].as_f64().unwrap() < 1e-6);
}

#[test]
fn hypotheses_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    circuit(dir.path(), "4x4", 12, 5, "c.json");
    ok(dir.path(), &["sample", "--circuit", "c.json", "--fidelity", "0.5", "-n", "5000", "--seed", "6", "--out", "s.bin"]);
    let base = ["analyze", "--circuit", "c.json", "--samples", "s.bin", "--bootstrap", "0", "--out", "a.json"];
    let with = |extra: &[&str]| code(dir.path(), &[&base[..], extra].concat());
    assert_eq!(with(&["--expect-fidelity", "0.5", "--reject-fidelity", "0"]), 0);
    assert_eq!(with(&["--reject-fidelity", "0.5"]), 3);
    assert_eq!(with(&["--expect-fidelity", "0"]), 3);
    let a = json(&dir.path().join("a.json"));
    assert_eq!(a["hypotheses"][0]["pass"], false);
}

#[test]
fn input_and_resource_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(dir.path(), &["analyze", "--circuit", "missing.json", "--samples", "x.bin", "--out", "a.json"]), 2);
    fs::write(dir.path().join("bad.json"), "{\"format\": 3}").unwrap();
    assert_eq!(code(dir.path(), &["sample", "--circuit", "bad.json", "-n", "10", "--out", "s.bin"]), 2);
    circuit(dir.path(), "3x4", 6, 1, "c.json");
    assert_eq!(code(dir.path(), &["sample", "--circuit", "c.json", "-n", "10", "--max-qubits", "8", "--out", "s.bin"]), 4);
    circuit(dir.path(), "2x4", 6, 1, "small.json");
    ok(dir.path(), &["sample", "--circuit", "small.json", "--model", "ideal", "-n", "100", "--out", "s.bin"]);
    let out = run(dir.path(), &["analyze", "--circuit", "c.json", "--samples", "s.bin", "--out", "a.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("s.bin"));
}

#[test]
fn directory_mode_combines_instances() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("instances");
    fs::create_dir(&inst).unwrap();
    for i in 0..12u64 {
        let (c, s) = (format!("c{i:02}.json"), format!("s{i:02}.bin"));
        circuit(&inst, "3x4", 10, 100 + i, &c);
        let seed = (200 + i).to_string();
        ok(&inst, &["sample", "--circuit", &c, "--fidelity", "0.2", "-n", "4000", "--seed", &seed, "--out", &s]);
    }
    ok(dir.path(), &["analyze", "--dir", "instances", "--bootstrap", "0", "--out", "all.json", "--csv", "all.csv"]);
    let a = json(&dir.path().join("all.json"));
    assert_eq!(a["report"], "analysis-combined");
    let instances = a["instances"].as_array().unwrap();
    assert_eq!(instances.len(), 12);
    let weights: f64 = instances.iter().map(|r| r["sigma"].as_f64().unwrap().powi(-2)).sum();
    let mean: f64 = instances
        .iter()
        .map(|r| r["fidelity"].as_f64().unwrap() * r["sigma"].as_f64().unwrap().powi(-2))
        .sum::<f64>()
        / weights;
    let combined = a["combined"]["fidelity"].as_f64().unwrap();
    assert!((combined - mean).abs() < 1e-12);
    assert!((a["combined"]["sigma"].as_f64().unwrap() - weights.powf(-0.5)).abs() < 1e-12);
    assert!((combined - 0.2).abs() < 0.05, "combined {combined}");
    assert_eq!(fs::read_to_string(dir.path().join("all.csv")).unwrap().lines().count(), 101);
}

#[test]
fn cost_tnc_on_small_circuit() {
    let dir = tempfile::tempdir().unwrap();
    circuit(dir.path(), "3x4", 10, 1, "c.json");
    let args = ["cost", "tnc", "--circuit", "c.json", "--open", "3", "--restarts", "4", "--max-log2", "6"];
    ok(dir.path(), &[&args[..], &["--out", "t.json", "--csv", "r.csv"]].concat());
    let t = json(&dir.path().join("t.json"));
    assert_eq!(t["report"], "tnc");
    assert_eq!(t["n_qubits"], 12);
    assert!(t["flops_per_sample"].as_f64().unwrap() > 0.0);
    assert!(t["largest_log2_size"].as_f64().unwrap() <= 6.0);
    assert!(t["n_slices"].as_f64().unwrap() >= 1.0);
    assert!(t["cost"]["runtime_years"].as_f64().unwrap() > 0.0);
    assert_eq!(fs::read_to_string(dir.path().join("r.csv")).unwrap().lines().count(), 5);
}

#[test]
fn cost_sfa_speedup_is_below_ten() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["cost", "sfa", "--g", "54", "--delta-theta", "0.054", "--fidelity", "3.66e-4", "--out", "s.json"]);
    let s = json(&dir.path().join("s.json"));
    let speedup = s["speedup"].as_f64().unwrap();
    assert!(speedup > 1.0 && speedup < 10.0, "speedup {speedup}");
}

#[test]
fn calibrate_fixture_lowers_loss() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixtures().join("calibration");
    let circuits: Vec<String> = (0..8).map(|i| format!("circuit{i}.json")).collect();
    let samples: Vec<String> = (0..8).map(|i| format!("samples{i}.bin")).collect();
    let out = dir.path().join("cal.json");
    let mut args = vec!["calibrate", "--topology", "topology.json", "--initial", "nominal.json", "--circuits"];
    args.extend(circuits.iter().map(String::as_str));
    args.push("--samples");
    args.extend(samples.iter().map(String::as_str));
    args.extend(["--family", "columns", "--cuts", "2", "--train", "theta-phi", "--max-iters", "20"]);
    args.extend(["--out", out.to_str().unwrap()]);
    ok(&fx, &args);
    let report = json(&dir.path().join("cal.json.report.json"));
    let patches = report["patches"].as_array().unwrap();
    assert_eq!(patches.len(), 2);
    for p in patches {
        assert!(p["loss_after"].as_f64().unwrap() < p["loss_before"].as_f64().unwrap(), "{p}");
    }
}

#[test]
fn output_is_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    circuit(dir.path(), "3x4", 8, 1, "c.json");
    for (threads, out) in [("1", "a.bin"), ("3", "b.bin")] {
        let args = ["--threads", threads, "sample", "--circuit", "c.json", "--model", "trajectory", "-n", "3000"];
        ok(dir.path(), &[&args[..], &["--seed", "9", "--out", out]].concat());
    }
    assert_eq!(fs::read(dir.path().join("a.bin")).unwrap(), fs::read(dir.path().join("b.bin")).unwrap());
}

#[test]
fn config_file_defaults_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), r#"{"grid": "2x4", "cycles": 6, "seed": 11}"#).unwrap();
    ok(dir.path(), &["--config", "cfg.json", "generate", "--seed", "12", "--out", "a.json"]);
    circuit(dir.path(), "2x4", 6, 12, "b.json");
    assert_eq!(fs::read(dir.path().join("a.json")).unwrap(), fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn manifests_cover_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    circuit(dir.path(), "2x4", 6, 1, "c.json");
    ok(dir.path(), &["sample", "--circuit", "c.json", "-n", "500", "--seed", "3", "--out", "s.bin"]);
    let m = json(&dir.path().join("s.bin.manifest.json"));
    assert_eq!(m["command"], "sample");
    assert_eq!(m["seeds"][0][1], 3);
    assert_eq!(m["created_unix"], 1700000000);
    let listed: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert_eq!(listed, ["s.bin", "s.bin.json"]);
    assert_eq!(m["inputs"][0]["path"], "c.json");
    let side = json(&dir.path().join("s.bin.json"));
    assert_eq!(side["circuit_file"], "c.json");
    assert_eq!(side["circuit_sha256"], m["inputs"][0]["sha256"]);
}
