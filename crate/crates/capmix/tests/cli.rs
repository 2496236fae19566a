use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use capmix::bodyio::BodyFile;
use capmix::config::parse_config;
use capmix::suites::{build_mesh, seed_body};
use capmix_core::CapFunction;

fn capmix(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_capmix"));
    cmd.args(args).env_remove("CAPMIX_OUT").env_remove("CAPMIX_JOBS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
[geometry]
n = 2
omega0 = 0.3
[norm]
family = "ellipsoid"
matrix = [[1.0, 0.1, 0.3], [0.1, 1.3, 0.0], [0.3, 0.0, 1.0]]
[mesh]
level = 3
[suites]
run = ["symmetry", "minkowski", "operator", "mixdisc"]
[seeds]
list = [4, 5, 6]
"#;

#[test]
fn mixdisc_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "[geometry]\nn = 2\nomega0 = 0.0\n[suites]\nrun = [\"mixdisc\"]\n");
    let out = dir.path().join("out");
    let o = capmix(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "records.csv", "gaps.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let records = report["records"].as_array().unwrap();
    assert_eq!(report["summary"]["total"].as_u64().unwrap() as usize, records.len());
    assert_eq!(fs::read_to_string(out.join("gaps.csv")).unwrap().lines().next(), Some("check,gap"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = d.join("out");
    let out = out.to_str().unwrap();

    let missing = capmix(&["verify", "--config", d.join("nope.toml").to_str().unwrap(), "--out", out], &[]);
    assert_eq!(missing.status.code(), Some(2));

    let bad = write_config(d, "bad.toml", "[geometry]\nn = 2\nomega0 = 7.0\n[mesh]\nlevel = -1\n[suites]\nrun = [\"af\", \"nope\"]\n");
    let o = capmix(&["verify", "--config", bad.to_str().unwrap(), "--out", out], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    for path in ["mesh.level", "suites.run[1]", "geometry.omega0"] {
        assert!(err.contains(path), "{err}");
    }

    let syntax = write_config(d, "syntax.toml", "[geometry\nn = 2\n");
    assert_eq!(capmix(&["verify", "--config", syntax.to_str().unwrap(), "--out", out], &[]).status.code(), Some(2));

    let ok = write_config(d, "ok.toml", SMALL);
    let o = capmix(&["verify", "--config", ok.to_str().unwrap(), "--suite", "bogus", "--out", out], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(capmix(&["verify"], &[]).status.code(), Some(2));

    // a zero tolerance on a discretisation error must fail
    let strict = write_config(d, "strict.toml", &format!("{SMALL}[numerics.tolerances]\nsymmetry.swap = 0.0\n"));
    let o = capmix(&["verify", "--config", strict.to_str().unwrap(), "--suite", "symmetry", "--out", out], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL symmetry/symmetry.swap"));
}

#[test]
fn reports_do_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let run = |jobs: &str, name: &str| {
        let out = dir.path().join(name);
        let o = capmix(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs], &[]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("1", "a");
    let b = run("3", "b");
    let c = run("1", "c");
    for f in ["records.csv", "gaps.csv"] {
        let fa = fs::read(a.join(f)).unwrap();
        assert_eq!(fa, fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(fa, fs::read(c.join(f)).unwrap(), "{f}");
    }
    let strip = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("report.json")).unwrap()).unwrap();
        for r in v["records"].as_array_mut().unwrap() {
            r.as_object_mut().unwrap().remove("wall_ms");
        }
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn environment_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[geometry]\nn = 2\nomega0 = 0.0\n[suites]\nrun = [\"mixdisc\"]\n[output]\ndir = \"from-config\"\n",
    );
    let env_out = dir.path().join("from-env");
    let o = capmix(&["verify", "--config", cfg.to_str().unwrap()], &[("CAPMIX_OUT", env_out.to_str().unwrap()), ("CAPMIX_JOBS", "2")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(env_out.join("report.json").exists());
    let o = capmix(&["verify", "--config", cfg.to_str().unwrap()], &[("CAPMIX_OUT", env_out.to_str().unwrap()), ("CAPMIX_JOBS", "many")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn body_files_reproduce_caches() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path(), "c.toml", SMALL);
    let body_path = dir.path().join("bodies/b7.json");
    let o = capmix(&["body", "gen", "--config", cfg_path.to_str().unwrap(), "--seed", "7", "--out", body_path.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let file = BodyFile::read(&body_path).unwrap();
    assert_eq!(file.seed, Some(7));
    assert_eq!(file.omega0, 0.3);
    let cfg = parse_config(&cfg_path).unwrap();
    let mesh = build_mesh(&cfg, cfg.mesh_level).unwrap();
    let direct = seed_body(&mesh, 7, cfg.body_spec()).unwrap();
    let loaded = CapFunction::new(mesh.clone(), file.support_field().unwrap()).unwrap();
    assert_eq!(loaded.support(), direct.function().support());
    assert_eq!(loaded.caches(), direct.function().caches());
}

#[test]
fn mesh_info_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let dump = dir.path().join("nodes.csv");
    let o = capmix(&["mesh", "info", "--config", cfg.to_str().unwrap(), "--dump", dump.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    let info: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let nodes = info["nodes"].as_u64().unwrap() as usize;
    let text = fs::read_to_string(&dump).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("node_index,x0,x1,x2,tag,w,xi0,xi1,xi2,detA_F"));
    assert_eq!(lines.count(), nodes);
    assert!(text.contains(",boundary,") && text.contains(",interior,"));
}

#[test]
fn convergence_study() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("study");
    let o = capmix(
        &["study", "converge", "--config", cfg.to_str().unwrap(), "--check", "swap", "--levels", "2..4", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let rows: Vec<Vec<String>> = table.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(table.lines().next(), Some("check,level,value,residual,ratio"));
    assert_eq!(rows.len(), 3);
    let ratio: f64 = rows[2][4].parse().unwrap();
    assert!(ratio >= 2.0, "{table}");

    let o = capmix(&["study", "converge", "--config", cfg.to_str().unwrap(), "--check", "nope", "--levels", "2..3"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = capmix(&["study", "converge", "--config", cfg.to_str().unwrap(), "--check", "swap", "--levels", "3..2"], &[]);
    assert_eq!(o.status.code(), Some(2));
}
