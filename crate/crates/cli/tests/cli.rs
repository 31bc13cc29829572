use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cpas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpas")).args(args).output().expect("spawn cpas")
}

fn ok(args: &[&str]) -> Output {
    let out = cpas(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

#[test]
fn simulate_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    let args = ["simulate", "--beta1", "2.5", "--beta2", "5", "--gamma", "1", "--side", "200", "--tmax", "20", "--seed", "9", "--out", out];
    ok(&args);
    let first = (read(tmp.path(), "trajectory.csv"), read(tmp.path(), "summary.json"));
    ok(&args);
    let second = (read(tmp.path(), "trajectory.csv"), read(tmp.path(), "summary.json"));
    assert_eq!(first, second);
    assert!(first.0.starts_with("t,u0,u1,u2\n"));
    assert_eq!(first.0.lines().count(), 1 + 21);

    ok(&["simulate", "--beta1", "2.5", "--beta2", "5", "--gamma", "1", "--side", "200", "--tmax", "20", "--seed", "10", "--out", out]);
    assert_ne!(read(tmp.path(), "trajectory.csv"), first.0);
}

#[test]
fn simulate_summary_fields() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    ok(&["simulate", "--beta1", "0", "--beta2", "0", "--gamma", "0", "--tmax", "50", "--out", out]);
    let s = json(tmp.path(), "summary.json");
    assert_eq!(s["config"]["beta1"], 0.0);
    assert_eq!(s["config"]["init"], "single-1");
    assert!(s["extinction_time"].as_f64().unwrap() > 0.0);
    assert_eq!(s["final_density"]["u0"], 1.0);
    assert_eq!(s["events"], 1);
}

#[test]
fn snapshots_need_two_dimensions() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    let bad = cpas(&["simulate", "--snapshots", "1", "--out", out]);
    assert_eq!(bad.status.code(), Some(1));
    ok(&["simulate", "--dim", "2", "--side", "20", "--init", "all-2", "--tmax", "2", "--snapshots", "0,1", "--out", out]);
    let pgm = read(tmp.path(), "snapshot_t0.pgm");
    let mut lines = pgm.lines();
    assert_eq!(lines.next(), Some("P2"));
    assert_eq!(lines.next(), Some("20 20"));
    assert_eq!(lines.next(), Some("255"));
    assert!(lines.all(|l| l.split(' ').all(|v| v == "0")));
    assert!(tmp.path().join("snapshot_t1.pgm").exists());
}

#[test]
fn config_file_precedence() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "beta1 = 0.9\ntmax = 3\n\n[simulate]\nbeta1 = 0.7\n\n[sweep]\nbeta1_grid = \"1,2\"\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();

    ok(&["--config", cfg, "simulate", "--out", out]);
    let s = json(Path::new(out), "summary.json");
    assert_eq!(s["config"]["beta1"], 0.7);
    assert_eq!(s["config"]["tmax"], 3.0);

    ok(&["simulate", "--config", cfg, "--beta1", "0.5", "--out", out]);
    assert_eq!(json(Path::new(out), "summary.json")["config"]["beta1"], 0.5);

    ok(&["--config", cfg, "meanfield", "--out", out]);
    assert_eq!(json(Path::new(out), "fixed_points.json")["config"]["beta1"], 0.9);
}

#[test]
fn config_file_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    for (i, text) in ["betta1 = 2\n", "[simulate]\nbeta1_grid = \"1\"\n", "beta1 = \"fast\"\n", "[simulate\n"].iter().enumerate() {
        let cfg = tmp.path().join(format!("bad{i}.toml"));
        std::fs::write(&cfg, text).unwrap();
        let res = cpas(&["--config", cfg.to_str().unwrap(), "simulate", "--out", out]);
        assert_eq!(res.status.code(), Some(1), "{text}");
    }
    let missing = cpas(&["--config", "/nonexistent/cfg.toml", "simulate", "--out", out]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn invalid_input_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(cpas(&["simulate", "--beta1", "-1", "--out", out]).status.code(), Some(1));
    assert_eq!(cpas(&["meanfield", "--gamma", "-0.5", "--out", out]).status.code(), Some(1));
    assert_eq!(cpas(&["simulate", "--side", "0", "--out", out]).status.code(), Some(1));
    assert_eq!(cpas(&["simulate", "--init", "bernoulli:0.7,0.5", "--out", out]).status.code(), Some(1));
    assert_eq!(cpas(&["simulate", "--variant", "forest-fire", "--beta2", "0.1", "--out", out]).status.code(), Some(1));
    assert_eq!(cpas(&["simulate", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(cpas(&["simulate", "--variant", "other"]).status.code(), Some(2));
    assert_eq!(cpas(&[]).status.code(), Some(2));
}

#[test]
fn sweep_resumes_to_identical_output() {
    let tmp = TempDir::new().unwrap();
    let once = tmp.path().join("once");
    let split = tmp.path().join("split");
    let base = ["sweep", "--beta1-grid", "1:3:1", "--gamma-grid", "0,1", "--side", "60", "--tmax", "10", "--replicas", "40", "--seed", "5"];
    let with_out = |dir: &Path, extra: &[&str]| {
        let mut a: Vec<&str> = base.to_vec();
        a.extend_from_slice(&["--out", dir.to_str().unwrap()]);
        a.extend_from_slice(extra);
        a.into_iter().map(String::from).collect::<Vec<_>>()
    };
    let run = |a: Vec<String>| ok(&a.iter().map(String::as_str).collect::<Vec<_>>());

    run(with_out(&once, &[]));
    run(with_out(&split, &["--limit", "2"]));
    assert!(!split.join("sweep.csv").exists());
    assert_eq!(json(&split, "sweep.json")["complete"], false);
    run(with_out(&split, &["--limit", "3"]));
    run(with_out(&split, &[]));
    assert_eq!(read(&once, "sweep.csv"), read(&split, "sweep.csv"));

    let csv = read(&once, "sweep.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("beta1,beta2,gamma,survival,ci_lo,ci_hi,density,density_ci_lo,density_ci_hi"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!((rows[0][0], rows[0][2]), (1.0, 0.0));
    assert_eq!((rows[1][0], rows[1][2]), (1.0, 1.0));
    assert_eq!((rows[5][0], rows[5][2]), (3.0, 1.0));
    for r in &rows {
        assert!(r[4] <= r[3] && r[3] <= r[5]);
        assert!(r[7] <= r[6] && r[6] <= r[8]);
    }

    let other_seed: Vec<String> = with_out(&once, &[]).into_iter().map(|a| if a == "5" { "6".into() } else { a }).collect();
    let clash = cpas(&other_seed.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(clash.status.code(), Some(1));
}

#[test]
fn meanfield_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    ok(&["meanfield", "--beta1", "1", "--beta2", "3", "--gamma", "1", "--u1", "0.1", "--tmax", "200", "--out", out]);
    let fp = json(tmp.path(), "fixed_points.json");
    assert_eq!(fp["survival"], true);
    assert_eq!(fp["p12"]["stability"], "stable");
    // u1* = 1/2 - 1/4
    assert!((fp["p12"]["u1"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((fp["final_state"]["u2"].as_f64().unwrap() - 0.25).abs() < 1e-8);
    let csv = read(tmp.path(), "meanfield.csv");
    assert!(csv.starts_with("t,u1,u2\n0,0.1,0\n"));
    assert_eq!(csv.lines().count(), 1 + 2001);

    ok(&["meanfield", "--beta1", "0.5", "--beta2", "0.5", "--gamma", "1", "--out", out]);
    let fp = json(tmp.path(), "fixed_points.json");
    assert_eq!(fp["survival"], false);
    assert!(fp["p12"].is_null());
    assert_eq!(fp["p0"]["stability"], "stable");

    assert_eq!(cpas(&["meanfield", "--u1", "0.8", "--u2", "0.5", "--out", out]).status.code(), Some(1));
    assert_eq!(cpas(&["meanfield", "--stride", "0", "--out", out]).status.code(), Some(1));
}

#[test]
fn bounds_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    ok(&["bounds", "--dim", "2", "--gamma", "0.1", "--beta1", "70", "--radius", "3", "--out", out]);
    let b = json(tmp.path(), "bounds.json");
    assert_eq!(b["subcritical"], true);
    let mu = b["mu"].as_f64().unwrap();
    assert!((mu - 0.8 / 1.1).abs() < 1e-12);
    assert!((b["radius_bound"].as_f64().unwrap() - mu * mu).abs() < 1e-12);
    assert!(b["percolation"].is_null());

    let res = cpas(&["bounds", "--dim", "1", "--gamma", "1", "--percolation-radius", "4", "--out", out]);
    assert_eq!(res.status.code(), Some(1));
    ok(&["bounds", "--dim", "1", "--gamma", "1", "--gw-trees", "50", "--generations", "5", "--out", out]);
    let b = json(tmp.path(), "bounds.json");
    assert_eq!(b["radius_bound"], "not applicable");
    assert_eq!(b["branching"]["mean_generation"].as_array().unwrap().len(), 6);
}

#[test]
fn couple_modes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    ok(&["couple", "--check-tables", "--out", out]);
    let t = json(tmp.path(), "tables.json");
    assert_eq!(t["all_passed"], true);
    assert_eq!(t["reports"].as_array().unwrap().len(), 3);

    ok(&["couple", "--kind", "beta2", "--beta1", "1", "--beta2", "2", "--high", "3", "--gamma", "1", "--replicas", "8", "--side", "50", "--tmax", "10", "--out", out]);
    let c = json(tmp.path(), "couple.json");
    assert_eq!(c["all_dominated"], true);
    assert_eq!(c["runs"], 8);
    let csv = read(tmp.path(), "coupled.csv");
    assert!(csv.starts_with("t,u_inf_low,u_inf_high,dominated\n"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",1")));

    let demo = cpas(&["couple", "--demo-reversed", "--beta1", "3", "--beta2", "1", "--gamma", "0.2", "--high", "1", "--side", "20", "--tmax", "20", "--out", out]);
    assert_eq!(demo.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&demo.stdout).contains("coupling-breaks"));
    let d = json(tmp.path(), "demo.json");
    assert_eq!(d["found"], true);
    assert_eq!(d["report"]["exit"]["pair"], "10");

    assert_eq!(cpas(&["couple", "--kind", "beta1", "--beta1", "3", "--beta2", "2", "--high", "3.5", "--out", out]).status.code(), Some(1));
    assert_eq!(cpas(&["couple", "--kind", "gamma", "--out", out]).status.code(), Some(1));
    assert_eq!(cpas(&["couple", "--high", "2", "--out", out]).status.code(), Some(1));
    assert_eq!(cpas(&["couple", "--kind", "delta"]).status.code(), Some(2));
}
