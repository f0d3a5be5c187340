//! End-to-end runs of the `infogeo` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn infogeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infogeo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn verify_reports_pass_with_exit_zero() {
    let out = infogeo(&["verify", "simplex", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["schema"], 1);
    assert_eq!(report["suite"], "simplex");
    assert_eq!(report["seed"], 3);
    assert_eq!(report["pass"], true);
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    let mut sorted = names.clone();
    sorted.sort_unstable();
    assert_eq!(names, sorted);
    assert!(report["checks"][0].get("runtime_ms").is_none());
}

#[test]
fn tightened_tolerance_fails_with_exit_one() {
    let out = infogeo(&["verify", "simplex", "--tol", "simplex/duality=1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    assert_eq!(report["pass"], false);
    let check = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "simplex/duality")
        .unwrap();
    assert_eq!(check["pass"], false);
    assert!((check["threshold"].as_f64().unwrap() / 1e-30 - 1.0).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(infogeo(&["verify", "nonsense"]).status.code(), Some(2));
    assert_eq!(
        infogeo(&["verify", "simplex", "--tol", "no-equals-sign"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        infogeo(&["verify", "simplex", "--seed", "minus-one"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        infogeo(&["compute", "metric", "--model", "simplex:n=2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        infogeo(&["compute", "volume", "--model", "normal", "--points", "[0,1]"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        infogeo(&[
            "ball",
            "--model",
            "normal",
            "--center",
            "[0,1]",
            "--radius",
            "-1",
            "--samples",
            "4"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(infogeo(&[]).status.code(), Some(2));
}

#[test]
fn timings_are_opt_in() {
    let report = json(&infogeo(&["verify", "counterexample", "--timings"]));
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["runtime_ms"].is_number()));
}

#[test]
fn compute_fisher_metric_at_barycenter() {
    let out = infogeo(&[
        "compute",
        "metric",
        "--model",
        "simplex:n=2",
        "--points",
        "[0.3333333333333333,0.3333333333333333]",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["kind"], "metric");
    let g = &doc["result"];
    for (i, j, v) in [(0, 0, 6.0), (0, 1, 3.0), (1, 0, 3.0), (1, 1, 6.0)] {
        assert!((g[i][j].as_f64().unwrap() - v).abs() < 1e-12);
    }
}

#[test]
fn compute_kl_divergence() {
    let out = infogeo(&[
        "compute",
        "divergence",
        "--model",
        "kl-simplex",
        "--points",
        "[[0.5,0.5],[0.25,0.75]]",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let expected = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
    assert!((json(&out)["result"].as_f64().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn compute_outside_domain_reports_error_json() {
    let out = infogeo(&[
        "compute",
        "metric",
        "--model",
        "simplex:n=2",
        "--points",
        "[0.9,0.3]",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&out);
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["error"]["kind"], "DomainError");
}

#[test]
fn distance_emits_geodesic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.csv");
    let out = infogeo(&[
        "compute",
        "distance",
        "--model",
        "normal",
        "--points",
        "[[-0.75,0.5],[1.25,0.5]]",
        "--emit-path",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    // √2 arccosh(1 + (Δμ²/2) / (2σ²)) with Δμ = 2, σ = ½.
    let exact = 2f64.sqrt() * 5f64.acosh();
    assert!((json(&out)["result"].as_f64().unwrap() - exact).abs() / exact < 1e-4);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,x0,x1,v0,v1\n"));
    let rows = csv_rows(&text);
    let last = rows.last().unwrap();
    assert!((last[1].parse::<f64>().unwrap() - 1.25).abs() < 1e-6);
    assert!((last[2].parse::<f64>().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn euclidean_ball_is_a_circle() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("ball.csv");
    let out = infogeo(&[
        "ball",
        "--model",
        "euclid:n=2",
        "--center",
        "[1,2]",
        "--radius",
        "0.5",
        "--samples",
        "64",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&std::fs::read_to_string(&file).unwrap());
    assert_eq!(rows.len(), 64);
    let mut area = 0.0;
    for (a, b) in rows.iter().zip(rows.iter().cycle().skip(1)) {
        assert_eq!(a[1], "ok");
        let (x0, y0, x1, y1): (f64, f64, f64, f64) = (
            a[2].parse().unwrap(),
            a[3].parse().unwrap(),
            b[2].parse().unwrap(),
            b[3].parse().unwrap(),
        );
        assert!((((x0 - 1.0).powi(2) + (y0 - 2.0).powi(2)).sqrt() - 0.5).abs() < 1e-9);
        area += 0.5 * (x0 * y1 - x1 * y0);
    }
    // Inscribed regular 64-gon.
    let polygon = 0.5 * 64.0 * 0.25 * (2.0 * std::f64::consts::PI / 64.0).sin();
    assert!((area - polygon).abs() < 1e-9);
}

#[test]
fn zero_radius_ball_is_the_center() {
    let out = infogeo(&[
        "ball",
        "--model",
        "normal",
        "--center",
        "[0.5,2]",
        "--radius",
        "0",
        "--samples",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for row in csv_rows(&text) {
        assert_eq!(&row[1..], ["ok", "0.5", "2"]);
    }
}

#[test]
fn config_file_sets_seed_and_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        "# tightened duality\nseed = 11\ntol.simplex/duality = 1e-30\n",
    )
    .unwrap();
    let out = infogeo(&["verify", "simplex", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    assert_eq!(report["seed"], 11);
    // Command-line flags override the file.
    let out = infogeo(&[
        "verify",
        "simplex",
        "--config",
        cfg.to_str().unwrap(),
        "--tol",
        "simplex/duality=1e-5",
        "--seed",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["seed"], 4);
    assert_eq!(
        infogeo(&["verify", "simplex", "--config", "/nonexistent/run.conf"])
            .status
            .code(),
        Some(2)
    );
    assert!(!Path::new("/nonexistent/run.conf").exists());
}
