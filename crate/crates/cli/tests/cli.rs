use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn trajlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajlab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_slice(&read(dir, name)).unwrap()
}

#[test]
fn sample_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = tmp.path().join(name);
            let o = trajlab(&[
                "sample",
                "--seed",
                "7",
                "--batch",
                "2",
                "--threads",
                "1",
                "--solver",
                "heun",
                "--nfe",
                "6",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(o.status.success(), "{}", stderr(&o));
            out
        })
        .collect();
    for f in ["traj_0000.csv", "traj_0001.csv", "summary.json"] {
        assert_eq!(read(&runs[0], f), read(&runs[1], f), "{f}");
    }
    // heun spends two evaluations per step except the last
    assert_eq!(json(&runs[0], "summary.json")["nfe"], 11);
}

#[test]
fn sample_k_does_not_depend_on_batch_size() {
    let tmp = TempDir::new().unwrap();
    for (batch, name) in [("1", "one"), ("3", "three")] {
        let out = tmp.path().join(name);
        let o = trajlab(&["sample", "--seed", "2", "--batch", batch, "--nfe", "5", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(read(&tmp.path().join("one"), "traj_0000.csv"), read(&tmp.path().join("three"), "traj_0000.csv"));
}

#[test]
fn gits_full_budget_is_the_fine_grid_and_reruns_match() {
    let tmp = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = trajlab(&[
            "gits",
            "--seed",
            "1",
            "--teacher-nfe",
            "12",
            "--budget",
            "12,3",
            "--warmup",
            "8",
            "--threads",
            "1",
            "--dump-costs",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(read(&a, "gits_schedule.json"), read(&b, "gits_schedule.json"));
    assert_eq!(read(&a, "cost_matrix.csv"), read(&b, "cost_matrix.csv"));

    let doc = json(&a, "gits_schedule.json");
    let full = &doc["schedules"][0];
    assert_eq!(full["budget"], 12);
    assert_eq!(full["times"], doc["grid"]);
    let short = doc["schedules"][1]["path_indices"].as_array().unwrap();
    assert_eq!(short.len(), 4);
    assert_eq!((short[0].as_u64(), short[3].as_u64()), (Some(0), Some(12)));
}

#[test]
fn infeasible_budget_is_an_error() {
    let tmp = TempDir::new().unwrap();
    let o = trajlab(&[
        "gits",
        "--teacher-nfe",
        "6",
        "--budget",
        "7",
        "--warmup",
        "2",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("budget 7"), "{}", stderr(&o));
}

#[test]
fn geometry_reports_and_dimension_mismatch() {
    let tmp = TempDir::new().unwrap();
    let samples = tmp.path().join("s");
    let o =
        trajlab(&["sample", "--dataset", "gmm:d=3", "--batch", "2", "--nfe", "8", "--out", samples.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t0 = samples.join("traj_0000.csv");
    let t1 = samples.join("traj_0001.csv");

    let geo = tmp.path().join("g");
    let o = trajlab(&[
        "geometry",
        "--dataset",
        "gmm:d=3",
        "--out",
        geo.to_str().unwrap(),
        t0.to_str().unwrap(),
        t1.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&geo, "geometry_0001.json");
    assert!(report.is_object());
    let csv = String::from_utf8(read(&geo, "geometry_0000.csv")).unwrap();
    assert!(csv.starts_with("node,t,deviation,distance,eps_norm,logp_h1,logp_h2,logp_h3\n"));
    assert_eq!(csv.lines().count(), 10);
    assert!(json(&geo, "pca.json")["recon_error"].is_array());

    let o = trajlab(&["geometry", "--dataset", "gmm:d=5", "--out", geo.to_str().unwrap(), t0.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.contains("dimension 3") && msg.contains("dimension 5"), "{msg}");
}

#[test]
fn schedule_prints_the_published_uniform_row() {
    let o = trajlab(&["schedule", "--schedule-kind", "uniform", "--nfe", "5"]);
    assert!(o.status.success());
    let got: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    let want = trajlab::verify::PUBLISHED_UNIFORM[2];
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= 5e-5, "{g} vs {w}");
    }
}

#[test]
fn config_file_fills_in_and_flags_win() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# sampling run\nnfe = 4\nsolver = dpm2\nbatch = 1\n").unwrap();
    let out = tmp.path().join("o");
    let o = trajlab(&["sample", "--config", cfg.to_str().unwrap(), "--nfe", "6", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = json(&out, "summary.json");
    assert_eq!(summary["solver"]["method"], "dpm2");
    assert_eq!(summary["times"].as_array().unwrap().len(), 7);
    assert_eq!(summary["samples"].as_array().unwrap().len(), 1);

    fs::write(&cfg, "nfe\n").unwrap();
    let o = trajlab(&["sample", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(trajlab(&["sample", "--solver", "rk45"]).status.code(), Some(2));
    assert_eq!(trajlab(&["gits"]).status.code(), Some(2));
    assert_eq!(trajlab(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn verify_prints_one_line_per_criterion() {
    let o = trajlab(&["verify"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]")).collect();
    assert_eq!(lines.len(), 11, "{text}");
    let any_red = lines.iter().any(|l| l.starts_with("[FAIL]"));
    assert_eq!(o.status.code(), Some(if any_red { 1 } else { 0 }));
}
