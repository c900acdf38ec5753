//! End-to-end runs of the binary: command wiring, file outputs, and error
//! surfaces.

use std::path::Path;
use std::process::Command;

const TRIANGLE: &str =
    "POTTS 1\n3 3 3\n0.5 inf inf\n1 0 inf\n1 inf 0\n1 2 1.1\n2 3 1.1\n1 3 1.1\n";

fn potts(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_potts"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn json(args: &[&str]) -> serde_json::Value {
    let (ok, stdout, stderr) = potts(args);
    assert!(ok, "command {args:?} failed: {stderr}");
    serde_json::from_str(&stdout).expect("valid json report")
}

#[test]
fn solve_brute_and_expansion_agree_on_the_gadget() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.potts");
    std::fs::write(&input, TRIANGLE).unwrap();
    let input = input.to_str().unwrap();

    let brute = json(&["solve", "--input", input, "--method", "brute"]);
    assert_eq!(brute["energy"], 2.5);
    assert_eq!(brute["labels"], serde_json::json!([1, 1, 1]));
    assert_eq!(brute["schema_version"], 1);

    for seed in ["1", "2", "3"] {
        let exp = json(&[
            "solve", "--input", input, "--method", "expansion", "--seed", seed,
        ]);
        assert_eq!(exp["energy"], 2.5);
    }
}

#[test]
fn solve_single_node_returns_the_cheapest_label() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("one.potts");
    std::fs::write(&input, "POTTS 1\n1 0 3\n4 1.5 9\n").unwrap();
    let rep = json(&["solve", "--input", input.to_str().unwrap()]);
    assert_eq!(rep["labels"], serde_json::json!([2]));
    assert_eq!(rep["energy"], 1.5);
}

#[test]
fn lp_command_dumps_mps() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.potts");
    let mps = dir.path().join("t.mps");
    std::fs::write(&input, TRIANGLE).unwrap();
    let rep = json(&[
        "lp",
        "--input",
        input.to_str().unwrap(),
        "--dump-mps",
        mps.to_str().unwrap(),
    ]);
    assert_eq!(rep["integral"], true);
    assert_eq!(rep["objective"], 2.5);
    let text = std::fs::read_to_string(&mps).unwrap();
    assert!(text.starts_with("NAME"));
    assert!(text.ends_with("ENDATA\n"));
}

#[test]
fn repair_output_file_round_trips_and_passes_check() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.potts");
    let out = dir.path().join("repaired.potts");
    std::fs::write(&input, TRIANGLE).unwrap();

    let rep = json(&[
        "repair",
        "--input",
        input.to_str().unwrap(),
        "--method",
        "brute",
        "--psi",
        "0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(rep["objective"].as_f64().unwrap() > 0.0);
    let verdict = rep["post_check"]["verdict"].as_str().unwrap();
    assert!(verdict == "stable" || verdict == "boundary");

    // the emitted file parses and the checker agrees with the verdict
    let checked = json(&[
        "check",
        "--input",
        out.to_str().unwrap(),
        "--psi",
        "0.2",
    ]);
    assert!(checked["margin"].as_f64().unwrap() >= -1e-6);

    // parse -> serialize -> parse identity on the emitted file
    let text = std::fs::read_to_string(&out).unwrap();
    let inst = potts_cli::formats::parse_instance(&text, 1e6).unwrap();
    assert_eq!(text, potts_cli::formats::serialize_instance(&inst));
}

#[test]
fn repair_psi_grid_reports_each_value() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.potts");
    std::fs::write(&input, TRIANGLE).unwrap();
    let rep = json(&[
        "repair",
        "--input",
        input.to_str().unwrap(),
        "--method",
        "brute",
        "--psi-grid",
        "0.05,0.1,0.2",
    ]);
    let grid = rep["grid"].as_array().unwrap();
    assert_eq!(grid.len(), 3);
    assert_eq!(grid[0]["objective"], 0.0); // stable at psi = 0.05
    assert!(grid[2]["objective"].as_f64().unwrap() > 0.0);
    // objectives are monotone in psi
    let objs: Vec<f64> = grid.iter().map(|g| g["objective"].as_f64().unwrap()).collect();
    assert!(objs.windows(2).all(|w| w[0] <= w[1] + 1e-9));
}

#[test]
fn stereo_build_writes_a_parsable_instance() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("crop.potts");
    let rep = json(&[
        "stereo-build",
        "--left",
        data.join("stereo_left.pgm").to_str().unwrap(),
        "--right",
        data.join("stereo_right.pgm").to_str().unwrap(),
        "-k",
        "2",
        "--crop",
        "4,4,6,6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(rep["nodes"], 36);
    assert_eq!(rep["edges"], 60);
    let text = std::fs::read_to_string(&out).unwrap();
    let inst = potts_cli::formats::parse_instance(&text, 1e6).unwrap();
    assert_eq!(inst.node_count(), 36);
    // weight rule at the defaults emits P*s or s only
    for &w in inst.weights() {
        assert!(w == 8.0 || w == 4.0);
    }
}

#[test]
fn noise_sample_writes_positive_weights() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.potts");
    let out = dir.path().join("noisy.potts");
    std::fs::write(&input, TRIANGLE).unwrap();
    let rep = json(&[
        "noise",
        "--input",
        input.to_str().unwrap(),
        "--mode",
        "sample",
        "--sigma",
        "0.1",
        "--gamma",
        "0.3",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(rep["active_nodes"], 3);
    let inst =
        potts_cli::formats::parse_instance(&std::fs::read_to_string(&out).unwrap(), 1e6).unwrap();
    for &w in inst.weights() {
        assert!(w > 0.0);
    }
}

#[test]
fn bounds_reference_flag_embeds_the_published_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.potts");
    std::fs::write(&input, TRIANGLE).unwrap();
    let rep = json(&[
        "bounds",
        "--observed",
        input.to_str().unwrap(),
        "--stable",
        input.to_str().unwrap(),
        "--method",
        "brute",
        "--psi",
        "1",
        "--reference",
    ]);
    assert!(rep["curvature_bound"].as_f64().unwrap() < 1e-6);
    let reference = &rep["reference"];
    assert!(reference["status"].as_str().unwrap().contains("not reproduced"));
    assert_eq!(
        reference["fixed_psi_results"]["rows"][1]["instance"],
        "venus"
    );
}

#[test]
fn errors_are_reported_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.potts");
    std::fs::write(&bad, "POTTS 2\n1 0 1\n0\n").unwrap();
    let (ok, _, stderr) = potts(&["solve", "--input", bad.to_str().unwrap()]);
    assert!(!ok);
    assert!(stderr.contains("header"), "{stderr}");

    let (ok, _, stderr) = potts(&["solve", "--input", "/nonexistent/x.potts"]);
    assert!(!ok);
    assert!(stderr.contains("reading"), "{stderr}");

    let (ok, _, stderr) = potts(&[
        "repair",
        "--input",
        bad.to_str().unwrap(),
        "--psi",
        "0",
    ]);
    assert!(!ok && !stderr.is_empty());
}

#[test]
fn format_flag_rejects_unknown_values() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.potts");
    std::fs::write(&input, TRIANGLE).unwrap();
    let (ok, _, stderr) = potts(&[
        "solve",
        "--input",
        input.to_str().unwrap(),
        "--format",
        "yaml",
    ]);
    assert!(!ok);
    assert!(stderr.contains("json"), "{stderr}");
}

#[test]
fn timings_flag_adds_the_block_without_breaking_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.potts");
    std::fs::write(&input, TRIANGLE).unwrap();
    let with = json(&[
        "check",
        "--input",
        input.to_str().unwrap(),
        "--timings",
    ]);
    assert!(with["timings"]["total_ms"].as_f64().unwrap() >= 0.0);
    let without = json(&["check", "--input", input.to_str().unwrap()]);
    assert!(without.get("timings").is_none());
}

#[test]
fn bundled_pair_matches_generator() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let (left, right) = potts_cli::stereo::synthetic_pair(64, 48, 2, 42);
    let left_bytes = std::fs::read(data.join("stereo_left.pgm")).unwrap();
    let right_bytes = std::fs::read(data.join("stereo_right.pgm")).unwrap();
    assert_eq!(left_bytes, potts_cli::formats::write_pgm_p5(&left));
    assert_eq!(right_bytes, potts_cli::formats::write_pgm_p5(&right));
}
