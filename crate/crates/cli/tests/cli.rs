use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use frobforge_core::transport::GridDensity;
use serde_json::Value;

const QUINTIC: &str = "x1^5+x2^5+x3^5+x4^5+x5^5";
const CHAIN: &str = "x1^2*x2+x2^2";

fn frobforge(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_frobforge"));
    c.args(args).env_remove("FROBFORGE_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    frobforge(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["cone", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["cone", "--field", "Q"]).status.code(), Some(2));
    assert_eq!(run(&["cone", "--n", "1"]).status.code(), Some(2));
    assert_eq!(run(&["bhk", "analyze", "x1^2+x1^2"]).status.code(), Some(2));
    assert_eq!(run(&["bhk", "analyze", "2*x1^3"]).status.code(), Some(2));
    assert_eq!(run(&["kvn", "evolve", "--H", "duffing", "--t", "1"]).status.code(), Some(2));
    assert_eq!(run(&["kvn", "evolve", "--H", "harmonic"]).status.code(), Some(2));
    assert_eq!(run(&["cone", "--tol", "nope=1"]).status.code(), Some(2));
    assert_eq!(run(&["cone", "--tol", "cone.jordan=0"]).status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("kvn"));
}

#[test]
fn bhk_analyze_quintic() {
    let out = run(&["bhk", "analyze", QUINTIC]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["suite"], "bhk-analyze");
    assert_eq!(r["data"]["cy"], true);
    assert_eq!(r["data"]["weights"], serde_json::json!(["1/5", "1/5", "1/5", "1/5", "1/5"]));
    assert_eq!(r["data"]["autOrder"], 3125);
    for c in r["checks"].as_array().unwrap() {
        assert_eq!(c["status"], "pass");
    }
}

#[test]
fn bhk_analyze_loop_is_not_calabi_yau_but_passes() {
    let out = run(&["bhk", "analyze", "x1^3*x2+x2^3*x1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["data"]["cy"], false);
}

#[test]
fn bhk_dual_of_j_for_the_loop() {
    let out = run(&["bhk", "dual", "x1^3*x2+x2^3*x1", "--group", "1/4,1/4"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["data"]["groupOrder"], 4);
    assert_eq!(r["data"]["dualOrder"], 2);
    // a generator outside Aut(W) is an input error
    assert_eq!(run(&["bhk", "dual", "x1^3*x2+x2^3*x1", "--group", "1/3,0"]).status.code(), Some(2));
    assert_eq!(run(&["bhk", "dual", "x1^3*x2+x2^3*x1"]).status.code(), Some(2));
}

#[test]
fn bhk_check_passes() {
    assert_eq!(run(&["bhk", "check"]).status.code(), Some(0));
}

#[test]
fn cone_suite_passes_in_every_field() {
    let out = run(&["cone", "--field", "R", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_json(&out);
    assert_eq!(check(&r, "cone.flat_locus.wdvv")["status"], "pass");
    assert_eq!(check(&r, "cone.sectional.nonpositive")["samples"], 100);
    assert_eq!(check(&r, "cone.jordan")["samples"], 200);
    for field in ["C", "H"] {
        assert_eq!(run(&["cone", "--field", field, "--n", "2", "--samples", "5"]).status.code(), Some(0));
    }
}

#[test]
fn tightened_tolerance_fails_with_one() {
    let out = run(&["cone", "--n", "2", "--tol", "cone.jordan=1e-300", "--tol", "cone.bracket=1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let r = stdout_json(&out);
    assert_eq!(check(&r, "cone.jordan")["tolerance"].as_f64(), Some(1e-300));
    assert_eq!(check(&r, "cone.flat_locus.wdvv")["status"], "pass");
}

#[test]
fn floats_use_c_style_exponents() {
    let out = run(&["cone", "--n", "2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"tolerance\": 1.000000000000e-12"), "{text}");
    // keys are sorted
    let keys: Vec<usize> = ["\"checks\"", "\"data\"", "\"schemaVersion\"", "\"suite\"", "\"version\""]
        .iter()
        .map(|k| text.find(k).unwrap())
        .collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let s = run(&["kvn", "mirror-demo", CHAIN, "--seed", "5", "--samples", "60", "--out", out.to_str().unwrap()]);
        assert_eq!(s.status.code(), Some(0));
        let s = run(&["cone", "--n", "2", "--format", "json+csv", "--out", out.to_str().unwrap()]);
        assert_eq!(s.status.code(), Some(0));
    }
    for name in ["kvn-mirror-demo.json", "kvn-mirror-demo_path.csv", "cone.json", "cone_sectional.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let r = read_json(&a.join("kvn-mirror-demo.json"));
    assert_eq!(r["data"]["seed"], 5);
    assert_eq!(r["data"]["pathMonotone"], true);
    let path = fs::read_to_string(a.join("kvn-mirror-demo_path.csv")).unwrap();
    assert_eq!(path.lines().count(), 6);
}

#[test]
fn csv_tables_only_in_csv_mode() {
    let dir = tempfile::tempdir().unwrap();
    let json_only = dir.path().join("j");
    let with_csv = dir.path().join("c");
    assert_eq!(run(&["hessian", "--samples", "1", "--out", json_only.to_str().unwrap()]).status.code(), Some(0));
    let args = ["hessian", "--samples", "1", "--format", "json+csv", "--out", with_csv.to_str().unwrap()];
    assert_eq!(run(&args).status.code(), Some(0));
    assert!(json_only.join("hessian.json").exists());
    assert!(!json_only.join("hessian_potentials.csv").exists());
    let csv = fs::read_to_string(with_csv.join("hessian_potentials.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("potential,points,pairing,wdvv,curvature,flat,associative"));
    assert!(lines.count() >= 5);
}

#[test]
fn seed_precedence_across_flag_env_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# smoke settings\nseed = 7\nsamples = 3\nn = 2\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let seed_of = |out: Output| {
        assert_eq!(out.status.code(), Some(0));
        let r = stdout_json(&out);
        (r["checks"][0]["seed"].as_u64().unwrap(), r["checks"][0]["samples"].as_u64().unwrap())
    };
    assert_eq!(seed_of(run(&["cone"])).0, 42);
    assert_eq!(seed_of(run(&["cone", "--config", cfg])), (7, 3));
    let env = frobforge(&["cone", "--config", cfg]).env("FROBFORGE_SEED", "11").output().unwrap();
    assert_eq!(seed_of(env).0, 11);
    let flag = frobforge(&["cone", "--config", cfg, "--seed", "13"]).env("FROBFORGE_SEED", "11").output().unwrap();
    assert_eq!(seed_of(flag).0, 13);
    // flags beat config values
    assert_eq!(seed_of(run(&["cone", "--config", cfg, "--samples", "4"])).1, 4);
    fs::write(dir.path().join("bad.cfg"), "colour = blue\n").unwrap();
    let bad = dir.path().join("bad.cfg");
    assert_eq!(run(&["cone", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let bad_env = frobforge(&["cone"]).env("FROBFORGE_SEED", "abc").output().unwrap();
    assert_eq!(bad_env.status.code(), Some(2));
}

#[test]
fn timing_is_opt_in() {
    let plain = stdout_json(&run(&["bhk", "analyze", CHAIN]));
    assert!(plain.get("wallTimeSeconds").is_none());
    let timed = stdout_json(&run(&["bhk", "analyze", CHAIN, "--timing"]));
    assert!(timed["wallTimeSeconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn evolve_writes_density_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["kvn", "evolve", "--H", "harmonic", "--t", "1.5", "--grid", "64", "--snapshots", "3"];
    let out = frobforge(&args).args(["--out", dir.path().to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&dir.path().join("kvn-evolve.json"));
    assert_eq!(r["data"]["snapshots"].as_array().unwrap().len(), 4);
    assert_eq!(check(&r, "kvn.mass_drift")["tolerance"].as_f64(), Some(1e-12));
    for k in 0..=3 {
        let rho = GridDensity::read_binary(&dir.path().join(format!("kvn-evolve_snapshot_{k:03}.bin"))).unwrap();
        assert_eq!(rho.grid().nx(), 64);
        assert!((rho.total() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn kvn_check_passes() {
    let out = run(&["kvn", "check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn all_runs_every_suite_in_parallel_with_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (serial, parallel) = (dir.path().join("s"), dir.path().join("p"));
    assert_eq!(run(&["all", "--out", serial.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(run(&["all", "--parallel", "--out", parallel.to_str().unwrap()]).status.code(), Some(0));
    let names = ["hessian", "cone", "ma", "ot", "bhk-check", "kvn-check", "kvn-mirror-demo"];
    for name in names {
        let file = format!("{name}.json");
        assert_eq!(fs::read(serial.join(&file)).unwrap(), fs::read(parallel.join(&file)).unwrap(), "{name}");
    }
}
