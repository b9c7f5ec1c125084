//! End-to-end tests of the `distillq` binary: subcommand wiring, file
//! formats, config merging, manifests, and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_distillq"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn distillq")
}

fn stdout(output: &Output) -> String {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).unwrap()
}

#[test]
fn gen_adder_writes_ctq_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen-adder", "-n", "16", "-o", "adder16.ctq"]);
    assert!(out.status.success());
    let body = fs::read_to_string(dir.path().join("adder16.ctq")).unwrap();
    assert!(body.starts_with("qubits 16\n"));
    assert_eq!(body.lines().count(), 271); // header + 270 gates
    assert_eq!(body.lines().filter(|l| l.starts_with("t ")).count(), 60);

    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("adder16.ctq.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "gen-adder");
    assert_eq!(manifest["outputs"][0], "adder16.ctq");
    assert_eq!(manifest["config_digest"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["tool_version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn gen_adder_rejects_small_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen-adder", "-n", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_is_byte_deterministic_and_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["gen-adder", "-n", "16", "-o", "a.ctq"]);
    let first = stdout(&run_in(
        dir.path(),
        &["sweep", "-c", "a.ctq", "--buffers", "0..8,inf"],
    ));
    let second = stdout(&run_in(
        dir.path(),
        &["sweep", "-c", "a.ctq", "--buffers", "0..8,inf"],
    ));
    assert_eq!(first, second, "repeated sweep runs must be byte-identical");

    let golden = include_str!("golden/sweep_adder16.csv");
    // The golden file was produced from a circuit named adder16; only the
    // numbers matter, and the qubit column is identical either way.
    assert_eq!(first, golden);
}

#[test]
fn sweep_depth_column_is_constant_for_default_adder() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["gen-adder", "-n", "16", "-o", "a.ctq"]);
    let csv = stdout(&run_in(dir.path(), &["sweep", "-c", "a.ctq"]));
    for line in csv.lines().skip(1) {
        let depth: u64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(depth, 270);
    }
}

#[test]
fn emulate_csv_and_json_agree_on_depth() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["gen-adder", "-n", "4", "-o", "a.ctq"]);
    let csv = stdout(&run_in(dir.path(), &["emulate", "-c", "a.ctq"]));
    assert!(csv.starts_with("step,occupancy,event\n"));
    assert_eq!(csv.lines().count(), 1 + 1 + 54); // header + step 0 + 54 steps

    let json = stdout(&run_in(
        dir.path(),
        &["emulate", "-c", "a.ctq", "--format", "json"],
    ));
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["assembly_depth"], 54);
    assert_eq!(doc["consumed"], 12);
    assert_eq!(doc["stall_steps"], 0);
}

#[test]
fn chain_output_feeds_steady() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["gen-adder", "-n", "16", "-o", "a.ctq"]);
    run_in(
        dir.path(),
        &["chain", "-c", "a.ctq", "--buffer", "7", "-o", "m.json"],
    );
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(doc["states"].as_array().unwrap().len(), 9);
    assert_eq!(doc["total_transitions"], 270);

    let text = stdout(&run_in(dir.path(), &["steady", "--matrix", "m.json"]));
    assert!(text.contains("states = [0, 1, 2, 3, 4, 5, 6, 7, 8]"));
    assert!(text.contains("ergodic = true"));
}

#[test]
fn steady_prints_symmetric_distribution() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("half.json"),
        r#"{"probs": [[0.5, 0.5], [0.5, 0.5]]}"#,
    )
    .unwrap();
    let text = stdout(&run_in(dir.path(), &["steady", "--matrix", "half.json"]));
    assert!(text.contains("nu = [0.500000, 0.500000]"));
}

#[test]
fn steady_strict_ergodic_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("periodic.json"),
        r#"{"probs": [[0.0, 1.0], [1.0, 0.0]]}"#,
    )
    .unwrap();
    let relaxed = run_in(dir.path(), &["steady", "--matrix", "periodic.json"]);
    assert_eq!(relaxed.status.code(), Some(0));
    let strict = run_in(
        dir.path(),
        &["steady", "--matrix", "periodic.json", "--strict-ergodic"],
    );
    assert_eq!(strict.status.code(), Some(3));
}

#[test]
fn steady_requires_one_input() {
    let dir = tempfile::tempdir().unwrap();
    let none = run_in(dir.path(), &["steady"]);
    assert_eq!(none.status.code(), Some(2));
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["gen-adder", "-n", "4", "-o", "a.ctq"]);
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"rate": "1/9", "warmup": 2, "buffer": 3}"#,
    )
    .unwrap();
    // Config file slows the rate: stalls appear.
    let slow = stdout(&run_in(
        dir.path(),
        &[
            "emulate", "-c", "a.ctq", "--config", "cfg.json", "--format", "json",
        ],
    ));
    let slow: serde_json::Value = serde_json::from_str(&slow).unwrap();
    assert!(slow["stall_steps"].as_u64().unwrap() > 0);
    // The explicit flag overrides the config file's rate.
    let fast = stdout(&run_in(
        dir.path(),
        &[
            "emulate", "-c", "a.ctq", "--config", "cfg.json", "--rate", "16/63", "--format",
            "json",
        ],
    ));
    let fast: serde_json::Value = serde_json::from_str(&fast).unwrap();
    assert_eq!(fast["stall_steps"], 0);
}

#[test]
fn bad_config_file_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["gen-adder", "-n", "4", "-o", "a.ctq"]);
    fs::write(dir.path().join("cfg.json"), r#"{"rate": "2"}"#).unwrap();
    let out = run_in(
        dir.path(),
        &["emulate", "-c", "a.ctq", "--config", "cfg.json"],
    );
    assert_eq!(out.status.code(), Some(2));
    fs::write(dir.path().join("cfg.json"), r#"{"frequency": 3}"#).unwrap();
    let unknown = run_in(
        dir.path(),
        &["emulate", "-c", "a.ctq", "--config", "cfg.json"],
    );
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn table1_reference_matches_embedded_values() {
    let dir = tempfile::tempdir().unwrap();
    let csv = stdout(&run_in(dir.path(), &["table1", "--reference"]));
    assert!(csv.starts_with(
        "qubits,mean_size7,mean_infinite,states_infinite,utilization,transitions\n"
    ));
    assert!(csv.contains("16,2.80,2.96,9,0.69,270\n"));
    assert!(csv.contains("2048,4.82,454.50,1171,0.78,36846\n"));
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn table1_computed_subset() {
    let dir = tempfile::tempdir().unwrap();
    let csv = stdout(&run_in(dir.path(), &["table1", "--ns", "16,32"]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("16,"));
    assert!(lines[1].ends_with(",9,0.70,270"));
    assert!(lines[2].starts_with("32,"));
    assert!(lines[2].ends_with(",19,0.74,558"));
}

#[test]
fn calibrate_example_grid_selects_quarter_rate() {
    let dir = tempfile::tempdir().unwrap();
    let json = stdout(&run_in(
        dir.path(),
        &[
            "calibrate", "--rates", "1/4,16/63,1/3", "--shapes", "uniform", "--ns", "16,32,64",
        ],
    ));
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["best_rate"], "1/4");
    assert_eq!(doc["best_shape"], "uniform");
    assert_eq!(doc["per_n_errors"].as_array().unwrap().len(), 3);
    // The runner-up default rate stays exact on the structural columns.
    let csv = stdout(&run_in(
        dir.path(),
        &[
            "calibrate", "--rates", "16/63", "--shapes", "uniform", "--ns", "16,32,64",
            "--format", "csv",
        ],
    ));
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[1], "0.000000"); // transitions error
        assert_eq!(cells[2], "0.000000"); // states error
    }
}

#[test]
fn sweep_manifest_lists_inputs_and_digest() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["gen-adder", "-n", "4", "-o", "a.ctq"]);
    run_in(
        dir.path(),
        &["sweep", "-c", "a.ctq", "--buffers", "0..2", "-o", "r.csv"],
    );
    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("r.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "sweep");
    assert_eq!(manifest["inputs"][0], "a.ctq");
    assert_eq!(manifest["outputs"][0], "r.csv");
    // Identical flags yield the identical digest.
    run_in(
        dir.path(),
        &["sweep", "-c", "a.ctq", "--buffers", "0..2", "-o", "r2.csv"],
    );
    let second: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("r2.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["config_digest"], second["config_digest"]);
}
