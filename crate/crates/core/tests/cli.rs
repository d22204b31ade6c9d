use std::fs;
use std::path::Path;

use serde_json::Value;
use singspec::cli::{main_from_args, parse_config, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn run(command: &str, config: &str, out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec!["singspec", command, "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    main_from_args(args)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn minimal_config_file_gets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"potential": {"kind": "builtin", "name": "free"}}"#);
    let cfg = parse_config(Path::new(&cfg)).unwrap();
    assert_eq!(cfg.mesh_n, 2048);
    assert_eq!(cfg.eig_count, 5);
    assert_eq!(cfg.mollifier_widths.len(), 6);
}

#[test]
fn config_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (i, body) in [
        r#"{"potential": {"kind": "builtin", "name": "free"}, "mesh_n": 4}"#,
        r#"{"potential": {"kind": "builtin", "name": "free"}, "mollifier_widths": [0.5, 2.0]}"#,
        r#"{"potential": {"kind": "builtin", "name": "nonexistent"}}"#,
        r#"{"potential": {"kind": "builtin", "name": "single_delta", "params": {"alpha": 2}}}"#,
        r#"{"mesh_n": 64}"#,
    ]
    .iter()
    .enumerate()
    {
        let cfg = write_config(dir.path(), &format!("bad{i}.json"), body);
        assert_eq!(run("norms", &cfg, &out, &[]), EXIT_CONFIG, "{body}");
    }
    assert!(!out.exists());
    assert_eq!(main_from_args(["singspec", "norms"]), EXIT_CONFIG);
}

#[test]
fn check_on_free_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "free.json", r#"{"potential": {"kind": "builtin", "name": "free"}}"#);
    let out = dir.path().join("out");
    assert_eq!(run("check", &cfg, &out, &[]), EXIT_OK);
    let report = read_json(&out.join("check.json"));
    assert_eq!(report["violations"], 0);
    assert_eq!(report["passed"], true);
    assert_eq!(report["inequalities"]["violations"], 0);
    let suites = report["suites"].as_array().unwrap();
    assert!(suites.iter().all(|s| s["passed"] == true));
}

#[test]
fn spectrum_both_on_shifted_laplacian() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c5.json",
        r#"{"potential": {"kind": "builtin", "name": "constant", "params": {"c": 5}}, "mesh_n": 4096}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(run("spectrum", &cfg, &out, &["--method", "both"]), EXIT_OK);
    let report = read_json(&out.join("spectrum.json"));
    let expected = [6.0, 9.0, 14.0, 21.0, 30.0];
    for key in ["eigenvalues", "shooting"] {
        let list = if key == "shooting" { &report[key]["eigenvalues"] } else { &report[key] };
        for (z, want) in list.as_array().unwrap().iter().zip(expected) {
            assert!((z["re"].as_f64().unwrap() - want).abs() < 1e-4, "{key}: {z}");
        }
    }
    assert!(report["agreement"].as_f64().unwrap() <= 1e-4);
    assert!(report["eigenvalues"].as_array().unwrap().iter().all(|e| e["in_region"] == true));
}

#[test]
fn converge_on_delta_comb_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dc.json",
        r#"{"potential": {"kind": "builtin", "name": "delta_comb", "params": {"alpha": 1}}}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(run("converge", &cfg, &out, &[]), EXIT_OK);
    let report = read_json(&out.join("converge.json"));
    assert_eq!(report["hminus1_strictly_decreasing"], true);
    assert_eq!(report["resolvent_nonincreasing"], true);
    assert_eq!(report["final_below_tenth"], true);
    let csv = fs::read_to_string(out.join("converge.csv")).unwrap();
    assert!(csv.starts_with("width,hminus1_distance,a_n,resolvent_diff_norm,resolvent_at_vertex\n"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn enclosure_and_range_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cm.json",
        r#"{"potential": {"kind": "builtin", "name": "complex_mathieu", "params": {"c": 1}}, "mesh_n": 256}"#,
    );
    let out = dir.path().join("enc");
    assert_eq!(run("enclosure", &cfg, &out, &[]), EXIT_OK);
    let region = read_json(&out.join("region.json"));
    let k = region["K"].as_f64().unwrap();
    let vertex = region["region"]["lambda0"].as_f64().unwrap();
    assert!((vertex + 4.0 * (2.0 * k + 1.0).powi(4)).abs() <= 1e-12 * vertex.abs());
    assert!(region["m_k"].is_null());
    let boundary = fs::read_to_string(out.join("boundary.csv")).unwrap();
    assert_eq!(boundary.lines().count(), 801);

    let out = dir.path().join("range");
    assert_eq!(run("range", &cfg, &out, &[]), EXIT_OK);
    let range = read_json(&out.join("range.json"));
    assert_eq!(range["contained_in_MK"], true);
    assert_eq!(range["convex"], true);
    assert_eq!(fs::read_to_string(out.join("range.csv")).unwrap().lines().count(), 65);
}

#[test]
fn numerical_failure_exits_3_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "big.json",
        r#"{"potential": {"kind": "builtin", "name": "free"}, "mesh_n": 64, "lambda_probe": {"re": 1e300, "im": 0}}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(run("converge", &cfg, &out, &[]), EXIT_NUMERICAL);
    let err = read_json(&out.join("error.json"));
    assert_eq!(err["command"], "converge");
    assert_eq!(err["kind"], "singular");
    assert_eq!(read_json(&out.join("manifest.json"))["exit_code"], EXIT_NUMERICAL);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m.json",
        r#"{"potential": {"kind": "builtin", "name": "mathieu", "params": {"c": 1}}, "mesh_n": 512, "trials": 200}"#,
    );
    let out = dir.path().join("out");
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        assert_eq!(run("check", &cfg, &out, &["--seed", "11"]), EXIT_OK);
        snapshots.push((fs::read(out.join("check.json")).unwrap(), fs::read(out.join("manifest.json")).unwrap()));
    }
    assert_eq!(snapshots[0], snapshots[1]);
    let manifest: Value = serde_json::from_slice(&snapshots[0].1).unwrap();
    assert_eq!(manifest["config"]["seed"], 11);
    assert_eq!(manifest["artifacts"][0]["path"], "check.json");
    assert_eq!(manifest["artifacts"][0]["sha256"].as_str().unwrap().len(), 64);
}
