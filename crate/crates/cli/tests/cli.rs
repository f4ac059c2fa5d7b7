//! End-to-end runs of the binary on small configurations.

use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_usc-relax"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

const SMALL_RATES: &str = r#"{
  "mode": "rates",
  "reservoirs": [{"n": 120, "delta_omega": 0.03, "gamma": 0.03}, {"n": 120, "delta_omega": 0.03, "gamma": 0.02}],
  "omega_grid": {"start": 0.3, "stop": 0.6, "count": 3}
}"#;

#[test]
fn invalid_config_exits_with_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &SMALL_RATES.replace("\"count\": 3", "\"count\": 0"));
    let out = bin().args(["rates", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega_grid.count"));

    let cfg = write(dir.path(), "d.json", &SMALL_RATES.replace("\"mode\"", "\"typo\": 1, \"mode\""));
    let out = bin().args(["rates", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn emitted_config_is_complete_and_reusable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL_RATES);
    let out = bin().args(["rates", "--emit-config", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["estimation"]["window_fraction"], 0.9);
    assert_eq!(v["estimation"]["n_modes"], 4);
    assert!(v["reservoirs"][0]["g0"].is_number());
    let again = write(dir.path(), "again.json", &String::from_utf8(out.stdout).unwrap());
    let out2 = bin().args(["rates", "--emit-config", "--config"]).arg(&again).output().unwrap();
    assert!(out2.status.success());
}

#[test]
fn sweeps_are_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL_RATES);
    let mut outputs = Vec::new();
    for (jobs, sub) in [("1", "a"), ("3", "b")] {
        let out_dir = dir.path().join(sub);
        let st = bin().args(["rates", "--jobs", jobs, "--config"]).arg(&cfg).arg("--out").arg(&out_dir).status().unwrap();
        assert!(st.success());
        let mut meta: Value = serde_json::from_slice(&std::fs::read(out_dir.join("rates.meta.json")).unwrap()).unwrap();
        meta["config"]["output"]["directory"] = Value::Null;
        outputs.push((std::fs::read_to_string(out_dir.join("rates.csv")).unwrap(), meta));
    }
    assert!(outputs[0] == outputs[1], "outputs differ between worker counts");

    let rows = read_csv(&dir.path().join("a/rates.csv"));
    assert_eq!(rows.len(), 3);
    let omegas: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(omegas.windows(2).all(|w| w[1] > w[0]));
    // every row names the simulation it came from
    let meta = &outputs[0].1;
    let ids: Vec<&str> = meta["run_ids"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for (row, id) in rows.iter().zip(&ids) {
        assert_eq!(&row[12], id);
    }
    assert!(dir.path().join("a/rates.gp").exists());
}

#[test]
fn decoupled_reservoirs_give_zero_rates() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_RATES.replace("\"gamma\": 0.03", "\"g0\": 0").replace("\"gamma\": 0.02", "\"g0\": 0");
    let cfg = write(dir.path(), "c.json", &text);
    let st = bin().args(["rates", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
    assert!(st.success());
    for row in read_csv(&dir.path().join("rates.csv")) {
        let (gs, ga): (f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap());
        assert!(gs < 1e-9 && ga < 1e-9, "{row:?}");
    }
}

#[test]
fn lossless_eigenvalues_have_no_real_part() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"mode": "eigs", "dissipative": {"gamma1": 0, "gamma2": 0},
            "omega_grid": {"start": 0, "stop": 1.5, "count": 31}, "output": {"formats": ["csv", "json"]}}"#,
    );
    let st = bin().args(["eigs", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
    assert!(st.success());
    let rows = read_csv(&dir.path().join("eigs.csv"));
    assert_eq!(rows.len(), 31);
    for row in rows {
        for k in 0..4 {
            let re: f64 = row[1 + 2 * k].parse().unwrap();
            assert!(re.abs() < 1e-12, "{row:?}");
        }
    }
    assert!(dir.path().join("eigs.json").exists());
    assert!(!dir.path().join("eigs.gp").exists());
}

#[test]
fn single_point_grid_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"mode": "eigs", "dissipative": {"gamma1": 0.2, "gamma2": 0.01},
            "omega_grid": {"start": 0.5, "stop": 0.5, "count": 1}}"#,
    );
    let st = bin().args(["eigs", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
    assert!(st.success());
    assert_eq!(read_csv(&dir.path().join("eigs.csv")).len(), 1);
    let meta: Value = serde_json::from_slice(&std::fs::read(dir.path().join("eigs.meta.json")).unwrap()).unwrap();
    assert!(meta["exceptional_point"].is_null());
}

#[test]
fn lossless_models_coincide() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"mode": "compare", "pair": {"coupling": 0.3},
            "reservoirs": [{"n": 40, "delta_omega": 0.05, "g0": 0}, {"n": 40, "delta_omega": 0.05, "g0": 0}],
            "dissipative": {"gamma1": 0, "gamma2": 0}}"#,
    );
    let st = bin().args(["compare", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
    assert!(st.success());
    let meta: Value = serde_json::from_slice(&std::fs::read(dir.path().join("compare.meta.json")).unwrap()).unwrap();
    assert!(meta["max_trace_deviation"].as_f64().unwrap() < 1e-8);
    assert_eq!(meta["config"]["mode"], "compare");
}

#[test]
fn simulate_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"mode": "simulate", "pair": {"coupling": 0.2},
            "reservoirs": [{"n": 40, "delta_omega": 0.05, "gamma": 0.02}, {"n": 40, "delta_omega": 0.05, "gamma": 0.01}]}"#,
    );
    let st = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
    assert!(st.success());
    let rows = read_csv(&dir.path().join("simulate.csv"));
    assert_eq!(rows[0][3], "1.0000000000000000e0");
    let meta: Value = serde_json::from_slice(&std::fs::read(dir.path().join("simulate.meta.json")).unwrap()).unwrap();
    assert!(meta["energy_drift"].as_f64().unwrap() < 1e-6);
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = bin().args(["rates", "--config", "/nonexistent/cfg.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
