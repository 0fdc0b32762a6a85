use std::path::Path;
use std::process::Command;

use serde_json::Value;
use wishart_cd::cli::{run, EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
use wishart_cd::io;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("wishart-cd").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn version_lists_format_versions() {
    let (code, out, _) = call(&["--version"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("PCMR 1") && out.contains("PVM 1"), "{out}");
}

#[test]
fn help_mentions_every_subcommand() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, EXIT_OK);
    for sub in ["sample", "estimate", "test", "mc-size", "mc-power", "same-target", "detect", "metrics"] {
        assert!(out.contains(sub), "{sub} missing from help");
    }
    let (_, out, _) = call(&["detect", "--help"]);
    assert!(out.contains("--window") && out.contains("[default: 3]"));
    assert!(out.contains("--threshold") && out.contains("[default: 0.0001]"));
}

#[test]
fn identical_sample_files_give_unit_p_value() {
    let dir = tempfile::tempdir().unwrap();
    let a = p(dir.path(), "a.wsample.json");
    let (code, _, err) = call(&["sample", "--preset", "flevoland-b1", "-n", "40", "--seed", "3", "-o", &a]);
    assert_eq!(code, EXIT_OK, "{err}");
    for method in ["lr", "kl", "shannon", "renyi"] {
        let (code, out, err) = call(&["test", &a, &a, "--method", method]);
        assert_eq!(code, EXIT_OK, "{err}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["p_value"], 1.0);
        assert_eq!(v["statistic"], 0.0);
    }
}

#[test]
fn test_output_fields_and_looks_modes() {
    let dir = tempfile::tempdir().unwrap();
    let a = p(dir.path(), "a.wsample.json");
    let b = p(dir.path(), "b.wsample.json");
    call(&["sample", "--preset", "b1", "-n", "60", "--seed", "1", "-o", &a]);
    call(&["sample", "--preset", "b1", "-n", "60", "--seed", "2", "-o", &b]);
    let (_, out, _) = call(&["test", &a, &b, "--method", "kl"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["df"], 9.0);
    assert_eq!(v["looks_mode"]["known"], 4.0);
    let (_, out, _) = call(&["test", &a, &b, "--looks", "estimate"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["df"], 10.0);
    assert_eq!(v["looks_mode"], "estimated");
    let (_, out, _) = call(&["test", &a, &b, "--method", "renyi", "--beta", "0.5", "--looks", "fixed:4"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["method"], "renyi0.5");
}

#[test]
fn estimate_recovers_looks() {
    let dir = tempfile::tempdir().unwrap();
    let a = p(dir.path(), "a.wsample.json");
    call(&["sample", "--preset", "b1", "-n", "3000", "--seed", "4", "-o", &a]);
    let (code, out, _) = call(&["estimate", &a]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    let l = v["params"]["looks"].as_f64().unwrap();
    assert!((3.8..=4.2).contains(&l), "{l}");
    assert_eq!(v["sample_size"], 3000);
    let (_, out, _) = call(&["estimate", &a, "--looks", "fixed:4"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["params"]["looks"], 4.0);
}

#[test]
fn runs_are_deterministic_given_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (p(dir.path(), "a.pcmr"), p(dir.path(), "b.pcmr"));
    call(&["sample", "--preset", "b1", "--rows", "5", "--cols", "6", "--seed", "9", "-o", &a]);
    call(&["sample", "--preset", "b1", "--rows", "5", "--cols", "6", "--seed", "9", "-o", &b]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let csv1 = call(&["mc-size", "--preset", "b1", "--replications", "30", "--seed", "2"]).1;
    let csv2 = call(&["--threads", "3", "mc-size", "--preset", "b1", "--replications", "30", "--seed", "2"]).1;
    assert_eq!(csv1, csv2);
}

#[test]
fn mc_size_csv_layout_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = p(dir.path(), "size.json");
    std::fs::write(
        &cfg,
        r#"{"theta": {"preset": "flevoland-b1", "looks": 4}, "sample_sizes": [50], "levels": [0.05],
            "replications": 40, "methods": ["lr", "shannon"], "seed": 1}"#,
    )
    .unwrap();
    let csv_path = p(dir.path(), "out.csv");
    let (code, _, err) = call(&["mc-size", "--config", &cfg, "-o", &csv_path]);
    assert_eq!(code, EXIT_OK, "{err}");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,N,level_or_k,rate,mean_stat,ci_lo,ci_hi");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("lr,50,0.05,"));

    let (code, out, _) = call(&["mc-power", "--preset", "b1", "--replications", "20"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 1 + 5 * 3 * 4);
}

#[test]
fn same_target_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let r = p(dir.path(), "region.wsample.json");
    call(&["sample", "--preset", "b1", "-n", "100", "--seed", "5", "-o", &r]);
    let (code, out, err) = call(&["same-target", &r, "-n", "20", "--replications", "50", "--method", "lr"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(out.lines().count(), 1 + 3);
    let (code, _, err) = call(&["same-target", &r, "-n", "60", "--replications", "5"]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.starts_with("error[data]: region too small"), "{err}");
}

#[test]
fn detect_then_metrics_on_half_changed_pair() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (p(dir.path(), "a.pcmr"), p(dir.path(), "b.pcmr"));
    call(&["sample", "--preset", "b1", "--rows", "32", "--cols", "32", "--seed", "21", "-o", &a]);
    call(&["sample", "--preset", "b1", "--rows", "32", "--cols", "32", "--seed", "22", "--right-half-scale", "1.4", "-o", &b]);
    let (pvm, mask, render) = (p(dir.path(), "s.pvm"), p(dir.path(), "s.pgm"), p(dir.path(), "r.pgm"));
    let (code, out, err) = call(&["detect", &a, &b, "--method", "shannon", "--pvm", &pvm, "--mask", &mask, "--render", &render]);
    assert_eq!(code, EXIT_OK, "{err}");
    let summary: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(summary["failures"], 0);

    let map = io::read_pvalue_map(&pvm).unwrap();
    assert_eq!((map.rows, map.cols), (32, 32));
    let m = io::read_mask(&mask).unwrap();
    let changed_right = (0..32).flat_map(|r| (16..32).map(move |c| (r, c))).filter(|&(r, c)| m.get(r, c)).count();
    let changed_left = (0..32).flat_map(|r| (0..15).map(move |c| (r, c))).filter(|&(r, c)| m.get(r, c)).count();
    assert!(changed_right > 0 && changed_left == 0, "{changed_left} {changed_right}");
    // Every flagged pixel sits in the changed half.
    let right_fraction = changed_right as f64 / m.count() as f64;
    assert!(right_fraction > 0.9, "{right_fraction}");

    let reference = wishart_cd::detector::ChangeMask::new(32, 32, (0..1024).map(|i| i % 32 >= 16).collect()).unwrap();
    let ref_path = p(dir.path(), "ref.pgm");
    io::write_mask(&reference, &ref_path).unwrap();
    let (code, out, _) = call(&["metrics", &mask, &ref_path]);
    assert_eq!(code, EXIT_OK);
    let conv: Value = serde_json::from_str(&out).unwrap();
    let (_, out, _) = call(&["metrics", &mask, &ref_path, "--paper-literal-metrics"]);
    let lit: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(conv["fp"], lit["fn"]);
    assert_eq!(conv["fn"], lit["fp"]);
    assert_eq!(conv["convention"], "conventional");
    assert_eq!(lit["convention"], "paper_literal");
}

#[test]
fn exit_codes_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = call(&["test", "only-one"]);
    assert_eq!(code, EXIT_USAGE);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[usage]:"));

    let (code, _, _) = call(&["test", "a", "b", "--method", "hotelling"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = call(&["sample", "--preset", "nowhere", "-o", "x.json"]);
    assert_eq!(code, EXIT_USAGE);

    let missing = p(dir.path(), "missing.wsample.json");
    let (code, _, err) = call(&["estimate", &missing]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.starts_with("error[data]:"));

    let garbage = p(dir.path(), "garbage.pcmr");
    std::fs::write(&garbage, b"PCMX0000000000000000000000").unwrap();
    let (code, _, err) = call(&["detect", &garbage, &garbage]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("bad magic"), "{err}");

    // Identical observations leave the looks score without a root.
    let flat = p(dir.path(), "flat.wsample.json");
    std::fs::write(&flat, r#"{"p": 1, "matrices": [[[[2.0, 0.0]]], [[[2.0, 0.0]]], [[[2.0, 0.0]]]]}"#).unwrap();
    let (code, _, err) = call(&["estimate", &flat]);
    assert_eq!(code, EXIT_NUMERICAL, "{err}");
    assert!(err.starts_with("error[numerical]:"));
}

#[test]
fn binary_exit_status_matches() {
    let bin = env!("CARGO_BIN_EXE_wishart-cd");
    let status = Command::new(bin).arg("--version").output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    let bad = Command::new(bin).args(["detect"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
    assert_eq!(String::from_utf8_lossy(&bad.stderr).lines().count(), 1);
}
