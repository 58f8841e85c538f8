//! End-to-end runs of the `tddgeom` binary: exit codes and output files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tddgeom::experiment::Table;

fn tddgeom(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tddgeom"))
        .args(args)
        .current_dir(cwd)
        .env_remove("TDDGEOM_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cov.json",
        r#"{"name": "cov", "mode": "both", "n_draws": 300, "gamma_grid_db": [-10, 0, 10], "gnuplot": true}"#,
    );
    let out = dir.path().join("out");
    let o = tddgeom(&["run", &cfg, "--seed", "3", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = Table::parse_csv(&fs::read_to_string(out.join("cov.csv")).unwrap()).unwrap();
    assert_eq!(table.header, ["gamma_db", "analytic", "mc", "mc_ci_halfwidth"]);
    assert_eq!(table.rows.len(), 3);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("cov.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["config"]["seed"], 3);
    assert!(meta["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert!(out.join("cov.gp").exists());
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e.json", r#"{"name": "env", "gamma_grid_db": [0]}"#);
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_tddgeom"))
        .args(["run", &cfg])
        .current_dir(dir.path())
        .env("TDDGEOM_OUT", &target)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(target.join("env.csv").exists());
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mc.json",
        r#"{"name": "mc", "geometry": "ppp", "mode": "mc", "n_draws": 500, "gamma_grid_db": [-5, 5]}"#,
    );
    let mut csvs = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let o = tddgeom(&["run", &cfg, "--out", out.to_str().unwrap()], dir.path());
        assert!(o.status.success());
        csvs.push(fs::read(out.join("mc.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", r#"{"mix": {"alpha_d": 2}}"#);
    let o = tddgeom(&["run", &bad], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha_d"));

    let junk = write_config(dir.path(), "junk.json", "{ not json");
    assert_eq!(tddgeom(&["run", &junk], dir.path()).status.code(), Some(2));
    assert_eq!(tddgeom(&["run", "missing.json"], dir.path()).status.code(), Some(2));
    assert_eq!(tddgeom(&["recipe", "fig99"], dir.path()).status.code(), Some(2));
    assert_eq!(tddgeom(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    // a zero term budget cannot meet the truncation rule
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trunc.json", r#"{"kind": "isr_sweep", "series": {"rel_tol": 1e-15, "max_terms": 1}}"#);
    let o = tddgeom(&["run", &cfg, "--out", dir.path().to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn recipe_dump_lists_configs() {
    let dir = tempfile::tempdir().unwrap();
    let o = tddgeom(&["recipe", "fig6-fpc", "--dump"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.matches("\"name\"").count(), 8);
}
