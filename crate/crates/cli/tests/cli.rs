//! Drives the qcut binary end to end over temp files.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn qcut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcut"))
        .args(args)
        .output()
        .expect("spawn qcut")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qcut-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn bench_cut_run_round_trip() {
    let circuit = tmp("bv10.qc");
    let out = qcut(&[
        "bench",
        "--kind",
        "bv",
        "--n",
        "10",
        "--secret",
        "1011010010",
        "-o",
        circuit.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let cut = stdout_json(&qcut(&["cut", circuit.to_str().unwrap(), "--alpha", "0.5"]));
    assert!(cut["cut_count"].as_u64().unwrap() >= 1);
    assert!(cut["quantum_area"]["ratio"].as_f64().unwrap() <= 1.0);

    let report = stdout_json(&qcut(&["run", circuit.to_str().unwrap(), "--alpha", "0.5"]));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["result"]["mode"], "full");
    assert!(report["result"]["l_inf_vs_oracle"].as_f64().unwrap() < 1e-9);
    assert_eq!(report["result"]["top_states"][0][0], "1011010010");
    assert_eq!(
        report["contraction"]["actual_multiplications"],
        report["contraction"]["predicted"]["multiplications"]
    );
}

#[test]
fn merge_subcommand_finds_secret() {
    let circuit = tmp("bv16.qc");
    let secret = "1011010010110101";
    qcut(&[
        "bench",
        "--kind",
        "bv",
        "--n",
        "16",
        "--secret",
        secret,
        "-o",
        circuit.to_str().unwrap(),
    ]);
    let report = stdout_json(&qcut(&[
        "merge",
        circuit.to_str().unwrap(),
        "--max-bins",
        "256",
        "--top-r",
        "1",
        "--max-recursions",
        "8",
    ]));
    assert_eq!(report["result"]["mode"], "merge");
    assert_eq!(report["result"]["solutions"][0]["bitstring"], secret);
    assert!(report["result"]["recursions_run"].as_u64().unwrap() <= 2);
}

#[test]
fn sample_subcommand_reports_statistics() {
    let circuit = tmp("bv8.qc");
    qcut(&[
        "bench",
        "--kind",
        "bv",
        "--n",
        "8",
        "--seed",
        "3",
        "-o",
        circuit.to_str().unwrap(),
    ]);
    let report = stdout_json(&qcut(&[
        "sample",
        circuit.to_str().unwrap(),
        "--sampler",
        "optimal",
        "--samples",
        "128",
        "--trials",
        "3",
        "--seed",
        "11",
    ]));
    let sampling = &report["sampling"];
    assert_eq!(sampling["sampler"], "optimal");
    assert_eq!(sampling["distinct_terms"].as_array().unwrap().len(), 3);
    assert!(
        sampling["optimal_expected_error"].as_f64().unwrap()
            <= sampling["uniform_expected_error"].as_f64().unwrap() + 1e-12
    );
}

#[test]
fn cost_subcommand_reports_golden_numbers() {
    let graph = tmp("worked.json");
    fs::write(
        &graph,
        r#"{"nodes": [{"qubits": 1}, {"qubits": 0}, {"qubits": 4}],
            "edges": [[0,1],[0,2],[0,2],[1,2]]}"#,
    )
    .unwrap();
    let report = stdout_json(&qcut(&["cost", graph.to_str().unwrap()]));
    assert_eq!(report["cost"]["input_storage"], 1168);
    assert_eq!(report["cost"]["steps"][0]["multiplications"], 512);
    assert_eq!(report["cost"]["steps"][1]["multiplications"], 2048);
    assert_eq!(report["cost"]["naive_multiplications"], 8704);
}

#[test]
fn run_accepts_config_file() {
    let config = tmp("run-config.json");
    fs::write(
        &config,
        r#"{
            "generator": {"kind": "bv", "n": 6, "secret": "101101"},
            "mode": "full",
            "sampler": "uniform",
            "samples": 64,
            "trials": 2,
            "seed": 7
        }"#,
    )
    .unwrap();
    let report = stdout_json(&qcut(&["run", "--config", config.to_str().unwrap()]));
    assert_eq!(report["result"]["mode"], "full");
    assert_eq!(report["sampling"]["trials"], 2);
}

#[test]
fn infeasible_cut_exits_with_code_two() {
    let circuit = tmp("uncuttable.qc");
    fs::write(&circuit, "qubits 2\nh 0\nh 1\n").unwrap();
    let out = qcut(&["cut", circuit.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bad_input_exits_with_code_one() {
    let circuit = tmp("broken.qc");
    fs::write(&circuit, "qubits 2\nxyzzy 0\n").unwrap();
    let out = qcut(&["run", circuit.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
