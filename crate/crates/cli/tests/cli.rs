use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use charkin_core::io::Dump;
use serde_json::{json, Value};
use tempfile::TempDir;

fn charkin(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_charkin"));
    cmd.args(args).env_remove("CHARKIN_OUT");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().last().unwrap_or_default()).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {text}\nstderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap_or_default())
        .unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn harmonic(ordering: &str, t_final: f64) -> Value {
    json!({
        "grid": {"N": 1, "G": 32, "L_lambda": 10.0, "L_mu": 10.0},
        "state": {"kind": "coherent", "alpha": [1.0, 0.0]},
        "hamiltonian": {"kind": "harmonic"},
        "evolve": {
            "ordering": ordering,
            "dt": std::f64::consts::TAU / 2000.0,
            "t_final": t_final,
            "cadence": 100
        }
    })
}

fn kerr(ordering: &str) -> Value {
    json!({
        "grid": {"N": 1, "G": 32, "L_lambda": 8.0, "L_mu": 8.0},
        "state": {"kind": "coherent", "alpha": [1.0, 0.0]},
        "hamiltonian": {"kind": "kerr", "chi": 0.05},
        "evolve": {"ordering": ordering, "dt": 2e-4, "t_final": 0.1, "cadence": 100}
    })
}

fn write_config(dir: &TempDir, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn evolve(dir: &TempDir, name: &str, cfg: &Value) -> (PathBuf, Value) {
    let config = write_config(dir, &format!("{name}.json"), cfg);
    let out = dir.path().join(name);
    let res = charkin(
        &[
            "evolve",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(
        res.status.success(),
        "evolve failed: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    let summary = stdout_json(&res);
    (out, summary)
}

/// `t,l2,linf` rows of `compare` output.
fn compare(a: &Path, b: &Path) -> Vec<[f64; 3]> {
    let res = charkin(&["compare", a.to_str().unwrap(), b.to_str().unwrap()], &[]);
    assert!(
        res.status.success(),
        "compare failed: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    String::from_utf8_lossy(&res.stdout)
        .lines()
        .skip(1)
        .map(|line| {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

#[test]
fn odd_grid_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let mut cfg = harmonic("symmetric", 0.1);
    cfg["grid"]["G"] = json!(31);
    let config = write_config(&dir, "odd.json", &cfg);
    let res = charkin(
        &[
            "evolve",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(res.status.code(), Some(2));
    let err = stderr_json(&res);
    assert_eq!(err["status"], "error");
    assert_eq!(err["kind"], "config");
    assert_eq!(err["message"], "grid.G must be even");
}

#[test]
fn unknown_fields_and_missing_files_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let mut cfg = harmonic("symmetric", 0.1);
    cfg["gird"] = json!({});
    let config = write_config(&dir, "typo.json", &cfg);
    assert_eq!(
        charkin(&["evolve", "--config", config.to_str().unwrap()], &[])
            .status
            .code(),
        Some(2)
    );
    let missing = dir.path().join("absent.json");
    assert_eq!(
        charkin(&["evolve", "--config", missing.to_str().unwrap()], &[])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn harmonic_run_conserves_normalization_and_writes_artifacts() {
    let dir = TempDir::new().unwrap();
    let (out, summary) = evolve(&dir, "h", &harmonic("symmetric", std::f64::consts::TAU));
    assert_eq!(summary["status"], "ok");
    assert!(summary["max_normalization_drift"].as_f64().unwrap() <= 1e-8);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["steps"], 2000);
    let snaps = manifest["snapshots"].as_array().unwrap();
    assert_eq!(snaps.len(), 21);
    for s in snaps {
        assert!(out.join(s["file"].as_str().unwrap()).exists());
    }
    let monitors = fs::read_to_string(out.join("monitors.csv")).unwrap();
    assert_eq!(
        monitors.lines().next().unwrap(),
        "t,norm_defect,herm_defect,bound_defect"
    );
    assert_eq!(monitors.lines().count(), 22);
    // one full period returns to the initial snapshot
    let load = |s: &Value| {
        Dump::load(&out.join(s["file"].as_str().unwrap()))
            .unwrap()
            .into_charfield()
            .unwrap()
    };
    assert!(load(&snaps[20]).relative_l2(&load(&snaps[0])) <= 1e-3);
}

#[test]
fn compare_of_a_run_with_itself_is_zero() {
    let dir = TempDir::new().unwrap();
    let (out, _) = evolve(&dir, "h", &harmonic("symmetric", 0.5));
    let rows = compare(&out, &out);
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[1] == 0.0 && r[2] == 0.0));
}

#[test]
fn quadratic_quantum_and_classical_runs_coincide() {
    let dir = TempDir::new().unwrap();
    let (q, _) = evolve(&dir, "q", &harmonic("symmetric", 1.0));
    let (c, _) = evolve(&dir, "c", &harmonic("classical", 1.0));
    let rows = compare(&q, &c);
    assert!(rows.iter().all(|r| r[1] <= 1e-6), "{rows:?}");
}

#[test]
fn kerr_quantum_and_classical_runs_separate() {
    let dir = TempDir::new().unwrap();
    let (q, _) = evolve(&dir, "q", &kerr("symmetric"));
    let (c, _) = evolve(&dir, "c", &kerr("classical"));
    let rows = compare(&q, &c);
    assert_eq!(rows[0][1], 0.0);
    assert!(rows.windows(2).all(|w| w[1][1] > w[0][1]), "{rows:?}");
}

#[test]
fn compare_rejects_mismatched_runs() {
    let dir = TempDir::new().unwrap();
    let (a, _) = evolve(&dir, "a", &harmonic("symmetric", 0.5));
    let (b, _) = evolve(&dir, "b", &harmonic("symmetric", 1.0));
    let res = charkin(&["compare", a.to_str().unwrap(), b.to_str().unwrap()], &[]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn hbar_scan_shows_second_order_convergence() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "k.json", &kerr("symmetric"));
    let out = dir.path().join("scan");
    let res = charkin(
        &[
            "hbar-scan",
            "--config",
            config.to_str().unwrap(),
            "--hbar",
            "0.4,0.2,0.1",
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let s = stdout_json(&res);
    for r in s["ratios"].as_array().unwrap() {
        assert!((r.as_f64().unwrap() - 4.0).abs() < 0.4);
    }
    let csv = fs::read_to_string(out.join("hbar_scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let config = write_config(&dir, "h.json", &harmonic("symmetric", 0.1));
    let res = charkin(
        &[
            "hbar-scan",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    let s = stdout_json(&res);
    assert!(s["defects"]
        .as_array()
        .unwrap()
        .iter()
        .all(|d| d.as_f64().unwrap() < 1e-12));
}

#[test]
fn oracle_check_passes_and_reports_each_method() {
    let dir = TempDir::new().unwrap();
    let mut cfg = kerr("symmetric");
    cfg["grid"]["L_lambda"] = json!(7.0);
    cfg["grid"]["L_mu"] = json!(7.0);
    cfg["oracle"] = json!({"n_max": 20, "methods": ["distributional", "quadrature"]});
    let config = write_config(&dir, "k.json", &cfg);
    let out = dir.path().join("oracle");
    let res = charkin(
        &[
            "oracle-check",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let s = stdout_json(&res);
    let results = s["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    assert!(results.iter().all(|r| r["pass"] == true));
    assert!(out.join("oracle_check.csv").exists());
}

#[test]
fn oracle_check_failure_exits_one() {
    let dir = TempDir::new().unwrap();
    let mut cfg = kerr("symmetric");
    cfg["oracle"] = json!({"n_max": 20, "tolerances": {"distributional": 1e-15}});
    let config = write_config(&dir, "k.json", &cfg);
    let res = charkin(
        &[
            "oracle-check",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(res.status.code(), Some(1));
    let err = stderr_json(&res);
    assert_eq!(err["kind"], "numerical");
    assert_eq!(err["detail"]["results"][0]["pass"], false);
}

#[test]
fn convert_changes_ordering_and_format() {
    let dir = TempDir::new().unwrap();
    let (out, _) = evolve(&dir, "h", &harmonic("symmetric", 0.1));
    let snap = out.join("snap_00000.bin");
    let target = dir.path().join("n.bin");
    let res = charkin(
        &[
            "convert",
            snap.to_str().unwrap(),
            "--to",
            "normal",
            "--output",
            target.to_str().unwrap(),
        ],
        &[],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert_eq!(stdout_json(&res)["tag"], "normal");

    let res = charkin(
        &[
            "convert",
            snap.to_str().unwrap(),
            "--to",
            "wigner",
            "--format",
            "csv",
        ],
        &[],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let path = PathBuf::from(stdout_json(&res)["output"].as_str().unwrap());
    let csv = fs::read_to_string(path).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x0,p0,re,im");
    assert_eq!(csv.lines().count(), 1 + 32 * 32);

    let res = charkin(
        &[
            "convert",
            snap.to_str().unwrap(),
            "--output",
            snap.to_str().unwrap(),
        ],
        &[],
    );
    assert_ne!(res.status.code(), Some(0));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "k.json", &kerr("symmetric"));
    let one = dir.path().join("one");
    let many = dir.path().join("many");
    for (threads, out) in [("1", &one), ("4", &many)] {
        let res = charkin(
            &[
                "--threads",
                threads,
                "evolve",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ],
            &[],
        );
        assert!(res.status.success());
    }
    for name in [
        "snap_00000.bin",
        "snap_00001.bin",
        "snap_00002.bin",
        "snap_00003.bin",
    ] {
        assert_eq!(
            fs::read(one.join(name)).unwrap(),
            fs::read(many.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn output_directory_comes_from_the_environment_when_no_flag_is_given() {
    let dir = TempDir::new().unwrap();
    let env_out = dir.path().join("from_env");
    let config = write_config(&dir, "h.json", &harmonic("symmetric", 0.05));
    let res = charkin(
        &["evolve", "--config", config.to_str().unwrap()],
        &[("CHARKIN_OUT", &env_out)],
    );
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(env_out.join("manifest.json").exists());

    let flag_out = dir.path().join("from_flag");
    let res = charkin(
        &[
            "evolve",
            "--config",
            config.to_str().unwrap(),
            "--out",
            flag_out.to_str().unwrap(),
        ],
        &[("CHARKIN_OUT", &env_out)],
    );
    assert!(res.status.success());
    assert!(flag_out.join("manifest.json").exists());
}
