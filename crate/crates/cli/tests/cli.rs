use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adaptmps"))
}

fn write_config(dir: &Path, name: &str, mut cfg: Value) -> PathBuf {
    cfg["output"]["dir"] = json!(dir.join(format!("{name}_out")));
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

fn run(sub: &str, config: &Path) -> Output {
    let out = bin().args(["--threads", "2", sub]).arg(config).output().unwrap();
    assert!(out.status.success(), "{sub} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Rows of a CSV as header-keyed maps.
fn read_csv(path: &Path) -> Vec<BTreeMap<String, f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| header.iter().zip(rec.unwrap().iter()).map(|(h, v)| (h.to_string(), v.parse().unwrap())).collect())
        .collect()
}

fn xyz(l: usize, gamma: f64, delta: f64, h: f64) -> Value {
    json!({"model": "xyz", "l": l, "gamma": gamma, "delta": delta, "h": h})
}

#[test]
fn gs_two_site_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "gs2", json!({"model": xyz(2, 0.0, 1.5, 0.0), "algorithm": {"gs": {}}, "output": {}}));
    run("gs", &cfg);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("gs2_out/energy.json")).unwrap()).unwrap();
    assert!((report["E"].as_f64().unwrap() + 3.5).abs() < 1e-10, "{report}");
    assert!(report["sweeps"].as_u64().unwrap() >= 1);
    assert!(report["max_bond"].as_u64().unwrap() >= 1);
    assert!(tmp.path().join("gs2_out/state.json").exists());
}

#[test]
fn gs_sector_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let closed = write_config(
        tmp.path(),
        "xxz",
        json!({"model": xyz(8, 0.0, 1.5, 0.5), "algorithm": {"gs": {}}, "initial": {"product": [1, 0, 1, 0, 1, 0, 1, 0]}, "output": {}}),
    );
    run("gs", &closed);
    let rows = read_csv(&tmp.path().join("xxz_out/pn.csv"));
    let nonzero: Vec<_> = rows.iter().filter(|r| r["weight"] > 0.0).collect();
    assert_eq!(nonzero.len(), 1);
    assert_eq!(nonzero[0]["sz_total"], 0.0);

    let open = write_config(tmp.path(), "xyz", json!({"model": xyz(8, 1.0, 1.5, 0.5), "algorithm": {"gs": {}}, "output": {}, "seed": 5}));
    run("gs", &open);
    let rows = read_csv(&tmp.path().join("xyz_out/pn.csv"));
    let sz: Vec<i64> = rows.iter().filter(|r| r["weight"] > 1e-12).map(|r| r["sz_total"] as i64).collect();
    assert!(sz.len() > 1, "{sz:?}");
    assert!(sz.iter().all(|s| s.rem_euclid(4) == 0), "{sz:?}");
}

#[test]
fn quench_without_change_is_stationary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "still",
        json!({
            "model": xyz(6, 0.0, 1.5, 0.5),
            "algorithm": {"quench": {"dt": 0.01, "n_steps": 30}},
            "output": {"record_interval": 5}
        }),
    );
    run("quench", &cfg);
    let rows = read_csv(&tmp.path().join("still_out/trajectory.csv"));
    assert_eq!(rows.len(), 7);
    for col in rows[0].keys().filter(|k| k.starts_with("sz_") || *k == "parity" || k.starts_with("P_")) {
        for r in &rows {
            assert!((r[col] - rows[0][col]).abs() < 1e-8, "{col} moved: {} vs {}", r[col], rows[0][col]);
        }
    }
}

#[test]
fn quench_keeps_parity() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "quench",
        json!({
            "model": xyz(6, 0.5, 1.5, 0.5),
            "algorithm": {"quench": {"dt": 0.005, "t_final": 0.25}},
            "output": {"record_interval": 10, "checkpoint_interval": 25}
        }),
    );
    run("quench", &cfg);
    let out = tmp.path().join("quench_out");
    let rows = read_csv(&out.join("trajectory.csv"));
    for r in &rows {
        assert!((r["parity"] - rows[0]["parity"]).abs() < 1e-6);
    }
    let last = rows.last().unwrap();
    let support = last.iter().filter(|(k, v)| k.starts_with("P_") && **v > 1e-12).count();
    assert!(support > 1);
    assert!(out.join("checkpoints/step_000025.json").exists());
}

fn lindblad_model(lambda: f64) -> Value {
    json!({
        "model": "lindblad_bh", "l": 3, "d": 4, "j": 1.0, "u": 4.0,
        "lambda1": lambda, "lambdaL": lambda, "nbar1": 0.75, "nbarL": 0.25
    })
}

#[test]
fn lindblad_without_baths_is_stationary() {
    let tmp = tempfile::tempdir().unwrap();
    // The Trotter split moves an eigenstate of the full Hamiltonian at O(dt^2).
    for (scheme, tol) in [("rk4_mpo", 1e-10), ("hybrid_trotter", 1e-6)] {
        let cfg = write_config(
            tmp.path(),
            scheme,
            json!({
                "model": lindblad_model(0.0),
                "algorithm": {"lindblad": {"scheme": scheme, "dt": 0.01, "n_steps": 20, "max_bond": 128}},
                "output": {"record_interval": 5}
            }),
        );
        run("lindblad", &cfg);
        let rows = read_csv(&tmp.path().join(format!("{scheme}_out/trajectory.csv")));
        for col in ["n_0", "n_1", "n_2", "trace", "P_1"] {
            for r in &rows {
                assert!((r[col] - rows[0][col]).abs() < tol, "{scheme} {col}: {} vs {}", r[col], rows[0][col]);
            }
        }
    }
}

#[test]
fn lindblad_sector_distribution_broadens() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "open",
        json!({"model": lindblad_model(1.0), "algorithm": {"lindblad": {"dt": 0.005, "t_final": 0.2, "max_bond": 128}}, "output": {"record_interval": 4}}),
    );
    run("lindblad", &cfg);
    let rows = read_csv(&tmp.path().join("open_out/trajectory.csv"));
    let support = |r: &BTreeMap<String, f64>| r.iter().filter(|(k, v)| k.starts_with("P_") && **v > 1e-10).count();
    assert_eq!(support(&rows[0]), 1);
    assert!(rows[0]["P_1"] > 1.0 - 1e-10);
    let sizes: Vec<usize> = rows.iter().map(support).collect();
    assert!(sizes.windows(2).all(|w| w[0] <= w[1]), "{sizes:?}");
    assert!(*sizes.last().unwrap() > 1);
    for r in &rows {
        assert!((r["trace"] - 1.0).abs() < 1e-8);
        assert!(r["odd_weight"] <= 1e-10);
    }
}

#[test]
fn validate_reports_and_flags_faults() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("report.json");
    let ok = bin().args(["validate", "--level", "fast", "--report"]).arg(&report).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let parsed: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["passed"], json!(true));

    let bad = bin().args(["validate", "--inject-fault", "fusion"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let parsed: Value = serde_json::from_slice(&bad.stdout).unwrap();
    let failed: Vec<&str> = parsed["suites"].as_array().unwrap().iter().filter(|s| s["passed"] == json!(false)).map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(failed, vec!["FusionViolation"]);
}

#[test]
fn invalid_config_exits_with_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad",
        json!({"model": xyz(4, 0.0, 1.0, 0.0), "algorithm": {"lindblad": {"dt": 0.1, "n_steps": 1}}, "output": {}}),
    );
    let out = bin().arg("lindblad").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
