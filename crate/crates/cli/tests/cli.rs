//! Black-box tests of the `unicert` binary: exit-code contract, artifact and
//! manifest layout, and the record-driven certification path.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use unicert::certify::EstimationPlan;
use unicert::statevector::{sample_uniform_measurement, MixedStateEnsemble, StateVector};
use unicert::{GraphSpec, StabilizerTableau};

fn unicert() -> Command {
    Command::new(env!("CARGO_BIN_EXE_unicert"))
}

fn run(args: &[&str]) -> Output {
    unicert().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn write_path_graph(dir: &Path, n: usize) -> PathBuf {
    let spec = GraphSpec::path(n).unwrap();
    let file = dir.join(format!("path{n}.graph"));
    std::fs::write(&file, spec.to_edge_list_string()).unwrap();
    file
}

#[test]
fn count_prints_closed_form_values() {
    for (n, expected) in [(1, "3"), (2, "12"), (3, "37")] {
        let out = run(&["count", "--n", &n.to_string()]);
        assert_eq!(exit_code(&out), 0);
        assert_eq!(stdout_str(&out).trim(), expected);
    }
}

#[test]
fn count_rejects_zero_qubits() {
    let out = run(&["count", "--n", "0"]);
    assert_eq!(exit_code(&out), 1);
    assert!(!stderr_str(&out).is_empty());
}

#[test]
fn unknown_flag_is_a_usage_error_not_a_failed_verdict() {
    let out = run(&["count", "--n", "2", "--bogus"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(exit_code(&out), 0);
}

#[test]
fn certify_ideal_state_exits_zero_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_path_graph(dir.path(), 5);
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "certify",
        "--graph",
        graph.to_str().unwrap(),
        "--epsilon",
        "1e-4",
        "--seed",
        "7",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert_eq!(report["verdict"], "Certified");
    assert_eq!(report["n_qubits"], 5);
    assert_eq!(report["shots_overridden"], false);
    assert!(report["u_hat"].as_f64().unwrap() > 1.0 - 13.0 * 1e-4 / 4.0);

    let manifest_path = dir.path().join("report.json.manifest.json");
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["seed"], 7);
    assert!(manifest["duration_seconds"].as_f64().unwrap() >= 0.0);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 1);
    let mut hasher = Sha256::new();
    hasher.update(std::fs::read(&report_path).unwrap());
    let digest: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(outputs[0]["sha256"], digest);
}

#[test]
fn certify_orthogonal_noise_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_path_graph(dir.path(), 3);
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "certify",
        "--graph",
        graph.to_str().unwrap(),
        "--epsilon",
        "1e-3",
        "--state",
        "orthogonal:0.5",
        "--seed",
        "1",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2, "stderr: {}", stderr_str(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert_eq!(report["verdict"], "Failed");
}

#[test]
fn certify_rejects_epsilon_outside_admissible_interval() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_path_graph(dir.path(), 5);
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "certify",
        "--graph",
        graph.to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(!report_path.exists(), "no artifact on a data error");
}

#[test]
fn certify_rejects_malformed_graph_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("bad.graph");
    std::fs::write(&graph, "5\n1 9\n").unwrap();
    let out = run(&[
        "certify",
        "--graph",
        graph.to_str().unwrap(),
        "--epsilon",
        "1e-4",
        "--out",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn certify_consumes_measurement_record_files() {
    let dir = tempfile::tempdir().unwrap();
    let n = 3;
    let graph_file = write_path_graph(dir.path(), n);
    let spec = GraphSpec::path(n).unwrap();
    let plan = EstimationPlan::for_graph(&spec).unwrap();
    let ensemble = MixedStateEnsemble::pure(StateVector::graph_state(&spec).unwrap());

    let mut record_args: Vec<String> = Vec::new();
    for (k, direction) in plan.schedule().directions().iter().enumerate() {
        let record = sample_uniform_measurement(&ensemble, direction, 5_000, 40 + k as u64).unwrap();
        let path = dir.path().join(format!("basis{k}.bin"));
        std::fs::write(&path, record.to_binary_bytes()).unwrap();
        record_args.push("--records".into());
        record_args.push(path.to_str().unwrap().into());
    }

    let report_path = dir.path().join("report.json");
    let mut args: Vec<String> = vec![
        "certify".into(),
        "--graph".into(),
        graph_file.to_str().unwrap().into(),
        "--epsilon".into(),
        "1e-3".into(),
        "--out".into(),
        report_path.to_str().unwrap().into(),
    ];
    args.extend(record_args.clone());
    let out = unicert().args(&args).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert_eq!(report["verdict"], "Certified");
    assert_eq!(report["shots_per_basis"], 5_000);

    // A record set missing one scheduled basis is a data error.
    let mut short_args: Vec<String> = args[..7].to_vec();
    short_args.extend(record_args[..4].iter().cloned());
    let out = unicert().args(&short_args).output().unwrap();
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn montecarlo_emits_contract_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.csv");
    let out = run(&[
        "montecarlo",
        "--n",
        "3",
        "--regime",
        "high",
        "--trials",
        "100",
        "--seed",
        "11",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let text = std::fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,epsilon,fidelity,trials,certified_rate,wilson_lo,wilson_hi"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "3");
    assert_eq!(row[3], "100");
    let rate: f64 = row[4].parse().unwrap();
    assert!((0.0..=1.0).contains(&rate));
    let (lo, hi): (f64, f64) = (row[5].parse().unwrap(), row[6].parse().unwrap());
    assert!(lo <= rate && rate <= hi);
}

#[test]
fn montecarlo_rejects_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "montecarlo",
        "--n",
        "",
        "--out",
        dir.path().join("t.csv").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn rydberg_sim_rejects_even_site_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "rydberg-sim",
        "--n",
        "4",
        "--h",
        "20",
        "--out",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn rydberg_sim_ideal_mode_reports_unit_observables() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let out = run(&[
        "rydberg-sim",
        "--n",
        "3",
        "--h",
        "20",
        "--mode",
        "ideal",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(report["n_sites"], 3);
    let m = report["m_values"].as_array().unwrap();
    assert_eq!(m.len(), 4); // one entry per site plus the symmetry operator
    for v in m {
        assert!((v.as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
    assert!((report["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(!report["schedules"].as_array().unwrap().is_empty());
}

#[test]
fn promise_check_accepts_target_and_rejects_witness() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GraphSpec::path(4).unwrap();
    let target = StabilizerTableau::graph_state(&spec).unwrap();
    let target_file = dir.path().join("target.stab");
    std::fs::write(&target_file, target.to_generator_list_string()).unwrap();
    let out = run(&["promise-check", "--generators", target_file.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report["verdict"], "is_target_graph_state");
    assert_eq!(report["conditions"]["c1"], 1);

    let witnesses = unicert::promise::witness_states(4).unwrap();
    assert!(!witnesses.is_empty());
    let witness_file = dir.path().join("witness.stab");
    std::fs::write(&witness_file, witnesses[0].1.to_generator_list_string()).unwrap();
    let out = run(&["promise-check", "--generators", witness_file.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report["verdict"], "is_not");
}

#[test]
fn promise_check_rejects_odd_qubit_count() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GraphSpec::path(3).unwrap();
    let tableau = StabilizerTableau::graph_state(&spec).unwrap();
    let file = dir.path().join("odd.stab");
    std::fs::write(&file, tableau.to_generator_list_string()).unwrap();
    let out = run(&["promise-check", "--generators", file.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn thread_env_var_is_validated() {
    let out = unicert()
        .args(["count", "--n", "2"])
        .env("UNICERT_THREADS", "abc")
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 1);
    let out = unicert()
        .args(["count", "--n", "2"])
        .env("UNICERT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0);
}
