use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sscn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sscn")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn gen_then_solve_and_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(d, "scn.toml", "num_users = 8\nnum_kbs = 5\nrng_seed = 4\n");
    let out = sscn(&["gen", "--config", &cfg, "--out", "scn.json"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let solver = write(d, "solver.toml", "max_iters = 3\n[pair]\nsigma = 1\n");
    let out = sscn(&["solve", "--scenario", "scn.json", "--solver", &solver, "--trace", "--mode", "exact"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(res["scheme"], "proposed");
    assert_eq!(res["trace"].as_array().unwrap().len(), 3);
    let trace = String::from_utf8(out.stderr).unwrap();
    assert!(trace.starts_with("t,dual_value,sst,max_violation\n"));
    assert_eq!(trace.lines().count(), 4);

    for kind in ["rpd", "mpk"] {
        let out = sscn(&["baseline", "--scenario", "scn.json", "--kind", kind, "--out", "b.json"], d);
        assert!(out.status.success());
        let res: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("b.json")).unwrap()).unwrap();
        assert_eq!(res["scheme"], kind);
    }
}

#[test]
fn gen_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = sscn(&["gen", "--seed", "5"], d).stdout;
    let b = sscn(&["gen", "--seed", "5"], d).stdout;
    let c = sscn(&["gen", "--seed", "6"], d).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn sweep_writes_one_row_per_scheme_and_point() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = write(
        d,
        "sweep.toml",
        "axis = \"num_kbs\"\nvalues = [3.0, 4.0]\nvariant = \"capacity\"\nvariant_values = [6.0, 10.0]\n\
         trials = 2\nseed = 3\n[base]\nnum_users = 6\n[solver]\nmax_iters = 2\n",
    );
    let out = sscn(&["sweep", "--config", &spec, "--seed", "9"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), sscn::expcli::CSV_HEADER);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 * 2 * 3);
    assert!(rows.iter().all(|r| r.contains(",9,")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(sscn(&["--help"], d).status.code(), Some(0));
    assert_eq!(sscn(&["frobnicate"], d).status.code(), Some(3));
    assert_eq!(sscn(&["baseline", "--kind", "best"], d).status.code(), Some(3));

    let bad = write(d, "bad.toml", "num_users = 1\n");
    let out = sscn(&["gen", "--config", &bad], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("num_users"));

    let tight = write(d, "tight.toml", "num_users = 6\nnum_kbs = 6\ncapacity = 4\neta_min = 1.0\n");
    assert_eq!(sscn(&["solve", "--config", &tight], d).status.code(), Some(2));

    assert_eq!(sscn(&["solve", "--scenario", "missing.json"], d).status.code(), Some(1));
}
