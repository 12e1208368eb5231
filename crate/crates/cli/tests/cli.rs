use std::path::{Path, PathBuf};
use std::process::Command;

use cosmon_cli::config::{schema, RunConfig};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn cosmon() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cosmon"))
}

#[test]
fn published_schema_is_current() {
    let path = root().join("docs/config.schema.json");
    let now = schema();
    if std::env::var_os("COSMON_UPDATE_SCHEMA").is_some() {
        std::fs::write(&path, &now).unwrap();
    }
    let published = std::fs::read_to_string(&path).expect("docs/config.schema.json");
    assert_eq!(published, now, "regenerate with COSMON_UPDATE_SCHEMA=1 cargo test -p cosmon-cli --test cli");
}

#[test]
fn shipped_configs_validate() {
    for entry in std::fs::read_dir(root().join("configs")).unwrap() {
        let p = entry.unwrap().path();
        RunConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn missing_config_exits_2() {
    let out = cosmon().args(["trace", "--config", "does/not/exist.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn schema_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("unknown.json", r#"{"bogus": 1}"#),
        ("type.json", r#"{"seed": "one"}"#),
        ("cross.json", r#"{"background": {"a_rot": 1.0}, "absorber": {"r_abs": 2.0, "r_src": 1.5}}"#),
        ("pow2.json", r#"{"grid": {"n_t": 300}}"#),
    ] {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        let out = cosmon().arg("trace").arg("--config").arg(&p).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn trace_writes_the_turning_point_ray() {
    let dir = tempfile::tempdir().unwrap();
    let out = cosmon()
        .args(["trace", "--config"])
        .arg(root().join("configs/trace.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("rays.csv")).unwrap();
    let row: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect::<Vec<f64>>())
        .find(|v| v[0] == 0.0 && v[1] == 1.0)
        .expect("row for ray 0 at s = 1");
    assert!((row[3] - 5f64.sqrt()).abs() < 1e-10, "{row:?}");
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "ok");
}

#[test]
fn failed_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("strict.json");
    std::fs::write(&p, r#"{"trace": {"random_seeds": 2}, "tolerances": {"ray_closed_form": 0.0}}"#).unwrap();
    let out = cosmon().arg("trace").arg("--config").arg(&p).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, r#"{"trace": {"random_seeds": 3}}"#).unwrap();
    let run = |seed: &str, sub: &str| {
        let d = dir.path().join(sub);
        let st = cosmon().arg("trace").arg("--config").arg(&p).arg("--out").arg(&d).args(["--seed", seed]).output().unwrap().status;
        assert!(st.success());
        std::fs::read(d.join("rays.csv")).unwrap()
    };
    assert_eq!(run("7", "a"), run("7", "b"));
    assert_ne!(run("7", "c"), run("8", "d"));
}
