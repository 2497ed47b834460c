use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn rdlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdlab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn key_values(stdout: &[u8]) -> Vec<(String, String)> {
    String::from_utf8_lossy(stdout)
        .lines()
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
        .collect()
}

const ADVECTION: &str = r#"
[problem]
kind = "rd"
seed = 3

[law]
name = "advection(1, 0.5)"

[mesh]
nx = 8
ny = 8
periodic = true

[initial]
profile = "sine"
left = [0.0]

[scheme]
kind = "supg"

[time]
t_end = 0.1
"#;

const SOD: &str = r#"
[problem]
kind = "euler_primitive"

[law]
name = "euler(1.4)"

[mesh]
kind = "interval"
nx = 200

[initial]
profile = "riemann"
left = [1.0, 0.0, 1.0]
right = [0.125, 0.0, 0.1]

[time]
t_end = 0.2
cfl = 0.4

[corrections]
correct_conservation = true
"#;

#[test]
fn run_writes_snapshots_dump_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "adv.toml", ADVECTION);
    let out = tmp.path().join("out");
    let o = rdlab(&["--strict", "--out", out.to_str().unwrap(), "run", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["snapshot_00000.csv", "steps.csv", "residual_dump.csv", "audit.txt", "manifest.toml"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let snap = fs::read_to_string(out.join("snapshot_00000.csv")).unwrap();
    assert!(snap.starts_with("dof,x,y,u0\n"));
    // 8x8 periodic P1: one DOF per vertex of the torus
    assert_eq!(snap.lines().count(), 1 + 64);

    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    let doc: toml::Value = manifest.parse().unwrap();
    assert_eq!(doc["manifest"]["seed"].as_integer(), Some(3));
    assert_eq!(doc["manifest"]["audits_passed"].as_bool(), Some(true));
    // every section is echoed with defaults filled in
    for section in ["problem", "law", "mesh", "initial", "scheme", "time", "corrections", "audit", "output"] {
        assert!(doc.get(section).is_some(), "section {section} not echoed");
    }
    assert_eq!(doc["scheme"]["tau_scale"].as_float(), Some(1.0));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "adv.toml", ADVECTION);
    let out = tmp.path().join("out");
    let o = rdlab(&["--seed", "11", "--out", out.to_str().unwrap(), "run", &cfg]);
    assert!(o.status.success());
    let doc: toml::Value = fs::read_to_string(out.join("manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(doc["manifest"]["seed"].as_integer(), Some(11));
    assert_eq!(doc["problem"]["seed"].as_integer(), Some(11));
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let text = ADVECTION.replace("profile = \"sine\"", "profile = \"random\"");
    let cfg = write_config(tmp.path(), "rnd.toml", &text);
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        assert!(rdlab(&["--out", d.to_str().unwrap(), "run", &cfg]).status.success());
    }
    let mut compared = 0;
    for entry in fs::read_dir(&dirs[0]).unwrap() {
        let name = entry.unwrap().file_name();
        if name.to_string_lossy().ends_with(".csv") {
            let a = fs::read(dirs[0].join(&name)).unwrap();
            let b = fs::read(dirs[1].join(&name)).unwrap();
            assert!(a == b, "{name:?} differs");
            compared += 1;
        }
    }
    assert!(compared >= 3);

    let other = tmp.path().join("c");
    assert!(rdlab(&["--seed", "99", "--out", other.to_str().unwrap(), "run", &cfg]).status.success());
    let a = fs::read(dirs[0].join("snapshot_00000.csv")).unwrap();
    let c = fs::read(other.join("snapshot_00000.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn unknown_keys_exit_with_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &format!("{ADVECTION}\n[output]\ndir = \"x\"\nformat = \"hdf5\"\n"));
    let o = rdlab(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("format"));

    let o = rdlab(&["run", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(tmp.path(), "law.toml", &ADVECTION.replace("advection(1, 0.5)", "mhd"));
    assert_eq!(rdlab(&["run", &cfg]).status.code(), Some(2));
}

#[test]
fn failed_audit_exits_3_only_when_strict() {
    let tmp = TempDir::new().unwrap();
    // two-stage time stepping gives up the maximum principle
    let text = r#"
[problem]
kind = "rd"
[law]
name = "burgers"
[mesh]
nx = 12
ny = 12
[scheme]
kind = "limited"
[time]
t_end = 0.3
subnodes = 3
[audit]
max_principle_tol = 1e-12
"#;
    let cfg = write_config(tmp.path(), "mp.toml", text);
    let out = tmp.path().join("o");
    let o = rdlab(&["--strict", "--out", out.to_str().unwrap(), "run", &cfg]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: toml::Value = fs::read_to_string(out.join("manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(doc["manifest"]["audits_passed"].as_bool(), Some(false));
    let o = rdlab(&["--out", out.to_str().unwrap(), "run", &cfg]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn burgers1d_writes_snapshots_and_series() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("b");
    let o = rdlab(&["--strict", "--out", out.to_str().unwrap(), "burgers1d", "--n", "100", "--tend", "0.5", "--every", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    let rows: Vec<Vec<f64>> = series
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() >= 3);
    for r in &rows {
        // a single monotone step keeps total variation 1
        assert!((r[2] - 1.0).abs() < 1e-12);
    }
    let last = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .filter(|n| n.starts_with("snapshot_"))
        .count();
    assert_eq!(last, rows.len());
    let snap = fs::read_to_string(out.join("snapshot_00000.csv")).unwrap();
    assert!(snap.starts_with("dof,x,y,u\n"));
    assert_eq!(snap.lines().count(), 101);

    assert_eq!(rdlab(&["burgers1d", "--scheme", "upwind"]).status.code(), Some(2));
}

#[test]
fn sod_with_corrections_meets_balance() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "sod.toml", SOD);
    let out = tmp.path().join("s");
    let o = rdlab(&["--strict", "--out", out.to_str().unwrap(), "run", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let kv = key_values(&o.stdout);
    let get = |k: &str| -> f64 { kv.iter().find(|(a, _)| a == k).unwrap().1.parse().unwrap() };
    assert!(get("balance_defect_after") <= 1e-10);
    assert!(get("balance_defect_before") > 1e-8);
    let snap = fs::read_to_string(out.join("snapshot_final.csv")).unwrap();
    assert!(snap.starts_with("dof,x,y,rho,u,p\n"));
}

#[test]
fn recover_certifies_a_residual_dump() {
    let tmp = TempDir::new().unwrap();
    for degree in [1, 2] {
        let text = ADVECTION.replace("ny = 8", &format!("ny = 8\ndegree = {degree}"));
        let cfg = write_config(tmp.path(), "adv.toml", &text);
        let run_dir = tmp.path().join(format!("run{degree}"));
        assert!(rdlab(&["--out", run_dir.to_str().unwrap(), "run", &cfg]).status.success());
        let rec = tmp.path().join(format!("rec{degree}"));
        let dump = run_dir.join("residual_dump.csv");
        let o = rdlab(&["--strict", "--out", rec.to_str().unwrap(), "recover", dump.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let cert = fs::read_to_string(rec.join("certification.csv")).unwrap();
        // 8x8 structured triangles
        assert_eq!(cert.lines().count(), 1 + 128);
        assert!(cert.lines().skip(1).all(|l| l.ends_with(",true")));
        let edges = fs::read_to_string(rec.join("edge_fluxes.csv")).unwrap();
        let per_element = if degree == 1 { 3 } else { 9 };
        assert_eq!(edges.lines().count(), 1 + 128 * per_element);
    }
}

#[test]
fn audit_reads_a_snapshot() {
    let tmp = TempDir::new().unwrap();
    let text = ADVECTION.replace("\"supg\"", "\"limited\"");
    let cfg = write_config(tmp.path(), "adv.toml", &text);
    let run_dir = tmp.path().join("r");
    assert!(rdlab(&["--out", run_dir.to_str().unwrap(), "run", &cfg]).status.success());
    let snap = run_dir.join("snapshot_00000.csv");
    let out = tmp.path().join("a");
    let o = rdlab(&["--out", out.to_str().unwrap(), "audit", snap.to_str().unwrap(), "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let kv = key_values(&o.stdout);
    for audit in ["conservation", "resummation", "lipschitz"] {
        assert!(kv.iter().any(|(k, v)| k == "audit" && v == audit), "missing {audit}");
    }
    assert!(out.join("audit.txt").exists());

    // a snapshot that does not match the configured mesh is rejected as bad input
    let bad = tmp.path().join("short.csv");
    fs::write(&bad, "dof,x,y,u0\n0,0,0,1\n").unwrap();
    let o = rdlab(&["audit", bad.to_str().unwrap(), "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_and_version_succeed() {
    assert!(rdlab(&["--help"]).status.success());
    let o = rdlab(&["--version"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
}
