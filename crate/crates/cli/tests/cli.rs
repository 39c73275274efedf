//! Binary-surface tests: exit codes, file formats, manifests, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entrolab"))
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .display()
        .to_string()
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("entrolab-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn dimension_carpet_prints_value() {
    let out = run(&["dimension", "carpet", "--spec", &data("mcmullen23.txt")]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let value: f64 = stdout.trim().parse().expect("prints a number");
    assert!((value - 1.3496838201955774).abs() < 1e-12);
}

#[test]
fn malformed_spec_exits_2_without_output() {
    let dir = tmp_dir("malformed");
    let bad = dir.join("bad.txt");
    fs::write(&bad, "carpet 1 3\n0 0\n").unwrap();
    let out_file = dir.join("result.json");
    let out = run(&[
        "dimension",
        "carpet",
        "--spec",
        bad.to_str().unwrap(),
        "--output",
        out_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_file.exists(), "no output file on config error");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn missing_required_key_exits_2() {
    let out = run(&["entropy", "bernoulli"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn size_cap_refusal_exits_3() {
    // Katok covering at order 20 on the 3-digit weighted system needs far
    // more than 2^16 cylinders.
    let out = run(&[
        "entropy",
        "katok",
        "--system",
        &data("three_digit.txt"),
        "--measure",
        &data("uniform3.txt"),
        "--a1",
        "1",
        "--a2",
        "1",
        "--n-grid",
        "18,20",
        "--delta",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_reproduce_id_exits_2() {
    let out = run(&["reproduce", "AC-nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reproduce_ac1_passes() {
    let out = run(&["reproduce", "AC-1"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("AC-1 PASS"));
}

#[test]
fn weighted_cover_bracket_and_manifest() {
    let dir = tmp_dir("cover");
    let result = dir.join("bracket.json");
    let probes = dir.join("probes.jsonl");
    let out = run(&[
        "entropy",
        "weighted-cover",
        "--system",
        &data("three_digit.txt"),
        "--a1",
        "1",
        "--a2",
        "1",
        "--depth",
        "14",
        "--tol",
        "1e-2",
        "--output",
        result.to_str().unwrap(),
        "--probes",
        probes.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&result).unwrap();
    assert!(text.contains("s_low") && text.contains("metric"));
    assert!(fs::read_to_string(&probes).unwrap().lines().count() > 3);

    // Manifest verifies, then catches tampering.
    let manifest = dir.join("bracket.json.manifest.json");
    let ok = run(&["verify-manifest", manifest.to_str().unwrap()]);
    assert!(ok.status.success());
    fs::write(&result, text.replace("s_low", "s_l0w")).unwrap();
    let bad = run(&["verify-manifest", manifest.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn result_files_bit_identical_across_reruns() {
    let dir = tmp_dir("determinism");
    let mut bytes = Vec::new();
    for pass in 0..2 {
        let csv = dir.join(format!("series-{pass}.csv"));
        let result = dir.join(format!("series-{pass}.json"));
        let out = run(&[
            "validate",
            "smb",
            "--system",
            &data("three_digit.txt"),
            "--measure",
            &data("uniform3.txt"),
            "--a1",
            "1",
            "--a2",
            "1",
            "--n-grid",
            "100,200,400",
            "--trajectories",
            "50",
            "--seed",
            "99",
            "--csv",
            csv.to_str().unwrap(),
            "--output",
            result.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        bytes.push((fs::read(&csv).unwrap(), fs::read(&result).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1], "rerun with the same seed must be bit-identical");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_equals_flags() {
    let dir = tmp_dir("config");
    let cfg = dir.join("exp.cfg");
    fs::write(
        &cfg,
        format!(
            "system = {}\nmeasure = {}\na1 = 1\na2 = 0\nn_grid = 4..10\ndelta = 0.5\n",
            data("full2.txt"),
            data("uniform2.txt")
        ),
    )
    .unwrap();
    let via_config = run(&["entropy", "katok", "--config", cfg.to_str().unwrap()]);
    assert!(via_config.status.success());
    let via_flags = run(&[
        "entropy",
        "katok",
        "--system",
        &data("full2.txt"),
        "--measure",
        &data("uniform2.txt"),
        "--a1",
        "1",
        "--a2",
        "0",
        "--n-grid",
        "4..10",
        "--delta",
        "0.5",
    ]);
    assert_eq!(via_config.stdout, via_flags.stdout);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn system_file_roundtrip_bit_exact() {
    for name in ["full2.txt", "golden.txt", "three_digit.txt"] {
        let text = fs::read_to_string(data(name)).unwrap();
        let sys = entrolab_core::io::parse_system(&text).unwrap();
        assert_eq!(entrolab_core::io::serialize_system(&sys), text);
    }
}

#[test]
fn frostman_cli_below_entropy() {
    let out = run(&[
        "rds",
        "frostman",
        "--system",
        &data("full2.txt"),
        "--measure",
        &data("uniform2.txt"),
        "--a1",
        "1",
        "--a2",
        "0",
        "--s",
        "0.6",
        "--n-min",
        "20",
        "--n-max",
        "40",
        "--samples",
        "200",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("violations = 0"));
}

#[test]
fn rds_fiber_entropy_report_lines() {
    let dir = tmp_dir("rds");
    let report = dir.join("fibers.jsonl");
    let out = run(&[
        "rds",
        "fiber-entropy",
        "--system",
        &data("full2.txt"),
        "--measure",
        &data("uniform2.txt"),
        "--driver",
        "rotation",
        "--alpha",
        "golden",
        "--a1",
        "1",
        "--a2",
        "0",
        "--n-grid",
        "4..10",
        "--delta",
        "0.5",
        "--omega-samples",
        "4",
        "--seed",
        "3",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<String> = fs::read_to_string(&report)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    // One record per omega plus the integrated record.
    assert_eq!(lines.len(), 5);
    assert!(lines.last().unwrap().contains("integrated"));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn variational_optimize_json_and_csv() {
    let dir = tmp_dir("variational");
    let result = dir.join("opt.json");
    let csv = dir.join("opt.csv");
    let out = run(&[
        "variational",
        "optimize",
        "--system",
        &data("three_digit.txt"),
        "--a1",
        "1",
        "--a2",
        "1",
        "--output",
        result.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&result).unwrap()).unwrap();
    assert!((json["value"].as_f64().unwrap() - 1.7627471740390859).abs() < 1e-9);
    assert_eq!(json["optimizer_probs"].as_array().unwrap().len(), 3);
    assert!(fs::read_to_string(&csv).unwrap().starts_with("a1,a2,value,method,probs"));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn chain_rule_cli() {
    let out = run(&[
        "validate",
        "chain-rule",
        "--measure",
        &data("markov2.txt"),
        "--alpha",
        "0:2",
        "--beta",
        "1:3",
        "--gamma",
        "3:4",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("pass = true"));
}

#[test]
fn help_per_subcommand() {
    for args in [
        vec!["--help"],
        vec!["entropy", "--help"],
        vec!["entropy", "weighted-cover", "--help"],
        vec!["validate", "smb", "--help"],
        vec!["reproduce", "--help"],
    ] {
        let out = run(&args);
        assert!(out.status.success(), "help failed for {args:?}");
    }
}
