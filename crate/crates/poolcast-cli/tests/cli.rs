//! End-to-end tests of the `poolcast` binary: pipeline smoke, golden
//! report, determinism across thread counts, figure data, and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_poolcast")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn latent_config(dir: &Path) -> PathBuf {
    let path = dir.join("latent.json");
    write(
        &path,
        r#"{ "generator": { "type": "latent",
             "model": { "k": 3, "variance": 1.0, "rho": 0.5, "alpha0": -0.5, "alpha": 0.8 },
             "link": { "family": "exponential_power", "power": 2.0 } } }"#,
    );
    path
}

fn conjugate_config(dir: &Path) -> PathBuf {
    let path = dir.join("conjugate.json");
    write(
        &path,
        r#"{ "generator": { "type": "conjugate",
             "pair": { "family": "beta_bernoulli", "alpha": 1.0, "beta": 1.0 },
             "design": { "private": [2, 2], "shared": 0 } } }"#,
    );
    path
}

#[test]
fn pipeline_smoke_simulate_fit_predict() {
    let dir = tempfile::tempdir().unwrap();
    let config = conjugate_config(dir.path());
    let data = dir.path().join("data.csv");
    let model = dir.path().join("model.json");
    let preds = dir.path().join("preds.csv");

    let out = run(&[
        "simulate", "--gen", "conjugate", "--config", config.to_str().unwrap(),
        "--rows", "1000", "--seed", "5", "--out", data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&[
        "fit", "--link", "ep", "--power", "2", "--data", data.to_str().unwrap(),
        "--seed", "5", "--out", model.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&[
        "predict", "--model", model.to_str().unwrap(), "--data", data.to_str().unwrap(),
        "--out", preds.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&preds).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let p: f64 = line.split(',').next().unwrap().parse().unwrap();
        assert!(p > 0.0 && p < 1.0, "prediction {p} not in (0,1)");
        rows += 1;
    }
    assert_eq!(rows, 1000);

    // Scoring the predictions completes and prints the three metrics.
    let out = run(&["score", "--preds", preds.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("mean_ls"));
    assert!(stdout.contains("mean_als"));
    assert!(stdout.contains("auc"));
}

#[test]
fn simulate_is_idempotent_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = latent_config(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let res = run(&[
            "simulate", "--gen", "latent", "--config", config.to_str().unwrap(),
            "--rows", "200", "--seed", "9", "--out", out.to_str().unwrap(),
        ]);
        assert!(res.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

fn cv_report(dir: &Path, data: &Path, jobs: Option<&str>, report_name: &str) -> Vec<u8> {
    let report = dir.join(report_name);
    let mut args = vec![
        "cv", "--data", data.to_str().unwrap(),
        "--methods", "p_1,avg,olop,klop,logit,glm-grid",
        "--power-grid", "2,9", "--folds", "5", "--seed", "7",
        "--report", report.to_str().unwrap(),
    ];
    if let Some(j) = jobs {
        args.push("--jobs");
        args.push(j);
    }
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(&report).unwrap()
}

#[test]
fn cv_reproduces_the_golden_report_for_any_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = latent_config(dir.path());
    let data = dir.path().join("data.csv");
    let out = run(&[
        "simulate", "--gen", "latent", "--config", config.to_str().unwrap(),
        "--rows", "300", "--seed", "42", "--out", data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let first = cv_report(dir.path(), &data, None, "r1.md");
    let second = cv_report(dir.path(), &data, Some("1"), "r2.md");
    let third = cv_report(dir.path(), &data, Some("4"), "r3.md");
    assert_eq!(first, second, "single-thread run differs");
    assert_eq!(first, third, "multi-thread run differs");

    let golden = include_bytes!("data/golden_report.md");
    assert_eq!(
        first,
        golden.to_vec(),
        "report drifted from the golden file:\n{}",
        String::from_utf8_lossy(&first)
    );
}

#[test]
fn plot_data_includes_worked_points() {
    let dir = tempfile::tempdir().unwrap();
    let fig = dir.path().join("fig.csv");
    let out = run(&["plot-data", "--figure", "1a", "--out", fig.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&fig).unwrap();
    let row = text.lines().find(|l| l.starts_with("0.75,")).expect("grid contains 0.75");
    let value: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - 5.0 / 6.0).abs() < 1e-6);

    let out = run(&["plot-data", "--figure", "1b", "--out", fig.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&fig).unwrap();
    let row = text.lines().find(|l| l.starts_with("0.75,")).unwrap();
    let value: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - 0.8).abs() < 1e-6);

    // The probit ensemble with a flat prior and the logit aggregator with
    // a = 1.25 are nearly indistinguishable.
    let out = run(&["plot-data", "--figure", "2b", "--out", fig.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&fig).unwrap();
    for line in text.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cells[1] - cells[2]).abs() < 0.035, "{line}");
    }

    let out = run(&["plot-data", "--figure", "9z", "--out", fig.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    // Unknown flags are fatal usage errors.
    let out = run(&["score", "--preds", "x.csv", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));
    // Unknown method.
    let out = run(&[
        "cv", "--data", "x.csv", "--methods", "wat", "--report", "r.md",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Missing input file.
    let out = run(&[
        "cv", "--data", dir.path().join("none.csv").to_str().unwrap(),
        "--methods", "avg", "--report", dir.path().join("r.md").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    // Predictions without the columns a subcommand needs.
    let preds = dir.path().join("preds.csv");
    write(&preds, "p\n0.5\n0.6\n");
    let out = run(&["score", "--preds", preds.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    // Numeric condition: every row unclassifiable for the extremizing rate.
    let degenerate = dir.path().join("deg.csv");
    write(&degenerate, "p,p_bar\n0.5,0.5\n0.7,0.7\n");
    let out = run(&["extremize-rate", "--preds", degenerate.to_str().unwrap(), "--prior", "0.3"]);
    assert_eq!(out.status.code(), Some(4));
    // Bad prior is usage.
    write(&degenerate, "p,p_bar\n0.5,0.6\n");
    let out = run(&["extremize-rate", "--preds", degenerate.to_str().unwrap(), "--prior", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_lists_every_subcommand_flag() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["simulate", "fit", "predict", "cv", "score", "extremize-rate", "plot-data"] {
        assert!(text.contains(sub), "--help missing {sub}");
    }
    let out = run(&["fit", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--link", "--power", "--power-grid", "--data", "--folds", "--seed", "--out"] {
        assert!(text.contains(flag), "fit --help missing {flag}");
    }
    assert!(text.contains("[default:"), "defaults not shown");
}

#[test]
fn gen_mismatch_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = latent_config(dir.path());
    let out = run(&[
        "simulate", "--gen", "conjugate", "--config", config.to_str().unwrap(),
        "--rows", "10", "--out", dir.path().join("d.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
