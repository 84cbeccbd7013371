//! End-to-end runs of the `lachesis` binary: exit codes, output formats, determinism.

use std::process::{Command, Output};

fn lachesis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lachesis")).args(args).env_remove("LACHESIS_SEED").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

const PAPER_RUN: [&str; 12] =
    ["--mode", "ertoltest", "--eps", "0.01", "--eta", "0.5", "--delta", "0.1", "--seed", "7", "--format", "json"];

#[test]
fn pristine_poisson_accepts_in_the_published_call_band() {
    let mut args = vec!["test", "--sampler", "poisson:29285:v1", "--target", "poisson:29285"];
    args.extend(PAPER_RUN);
    let out = lachesis(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["decision"], "Accept");
    let calls = v["trials"][0]["icond_calls"].as_f64().unwrap();
    assert!((3e5..=3e6).contains(&calls), "icond calls {calls}");
}

#[test]
fn flawed_poisson_rejects() {
    let mut args = vec!["test", "--sampler", "poisson:29285:v4", "--target", "poisson:29285"];
    args.extend(PAPER_RUN);
    let out = lachesis(&args);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["decision"], "Reject");
}

#[test]
fn usage_errors_exit_2() {
    let same = lachesis(&["test", "--sampler", "poisson:1000", "--eps", "0.3", "--eta", "0.3"]);
    assert_eq!(code(&same), 2);
    assert!(String::from_utf8_lossy(&same.stderr).contains("eta > epsilon"));
    assert_eq!(code(&lachesis(&["test", "--sampler", "cauchy:1"])), 2);
    assert_eq!(code(&lachesis(&["test", "--sampler", "poisson:1000", "--target", "zipf:2"])), 2);
    let tol = lachesis(&["test", "--mode", "toltest", "--sampler", "poisson:1000"]);
    assert_eq!(code(&tol), 2);
    assert!(String::from_utf8_lossy(&tol.stderr).contains("finite target support"));
    assert_eq!(code(&lachesis(&["case-study", "--family", "poisson", "--grid", ""])), 2);
    assert_eq!(code(&lachesis(&["frobnicate"])), 2);
}

#[test]
fn time_budget_exits_3() {
    let out = lachesis(&["case-study", "--family", "binomial", "--max-seconds", "0.3"]);
    assert_eq!(code(&out), 3);
}

fn small_sweep(extra: &[&str]) -> Vec<u8> {
    let mut args = vec![
        "case-study", "--family", "poisson", "--grid", "50,400", "--variants", "1,4", "--eps", "0.1", "--eta", "0.9",
        "--delta", "0.2", "--seed", "11", "--no-timing",
    ];
    args.extend(extra);
    let out = lachesis(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

#[test]
fn sweeps_are_byte_identical_across_thread_counts() {
    let one = small_sweep(&["--threads", "1"]);
    assert_eq!(one, small_sweep(&["--threads", "2"]));
    let text = String::from_utf8(one).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "family,params,variant,mode,decision,d_hat,draws,icond_calls,seconds,seed");
    assert_eq!(lines.len(), 5);
    let cells: Vec<(&str, &str)> = lines[1..].iter().map(|l| {
        let f: Vec<&str> = l.split(',').collect();
        (f[1], f[2])
    }).collect();
    assert_eq!(cells, [("50", "1"), ("50", "4"), ("400", "1"), ("400", "4")]);
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        for (i, field) in f.iter().enumerate().skip(5) {
            // an absent d_hat is the only empty numeric field
            if i == 5 && field.is_empty() {
                continue;
            }
            assert!(field.parse::<f64>().is_ok_and(f64::is_finite), "{line}");
        }
    }
}

#[test]
fn seed_falls_back_to_environment() {
    let args = ["test", "--sampler", "uniform:1:16", "--eps", "0.05", "--eta", "0.7", "--format", "json"];
    let flag = lachesis(&[&args[..], &["--seed", "9"]].concat());
    let env = Command::new(env!("CARGO_BIN_EXE_lachesis")).args(args).env("LACHESIS_SEED", "9").output().unwrap();
    assert_eq!(code(&flag), 0);
    assert_eq!(flag.stdout, env.stdout);
    let other = lachesis(&[&args[..], &["--seed", "10"]].concat());
    assert_ne!(flag.stdout, other.stdout);
}

#[test]
fn csv_and_file_output() {
    let path = std::env::temp_dir().join(format!("lachesis-cli-{}.csv", std::process::id()));
    let p = path.to_str().unwrap();
    let out = lachesis(&["perf", "--family", "geometric", "--grid", "0.5", "--eps", "0.1", "--eta", "0.9", "--out", p]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("geometric,0.5,1,ertoltest,Accept,"));
    let bad = lachesis(&["perf", "--family", "geometric", "--grid", "0.5", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(code(&bad), 1);
}

#[test]
fn validate_exit_codes() {
    assert_eq!(code(&lachesis(&["validate", "--sampler", "binomial:1000:0.3", "--samples", "40000", "--seed", "1"])), 0);
    let flawed = lachesis(&["validate", "--sampler", "binomial:31306:0.16:v2", "--samples", "40000", "--seed", "1"]);
    assert_eq!(code(&flawed), 1);
    assert!(String::from_utf8_lossy(&flawed.stdout).contains("FAIL  draw goodness of fit"));
}

#[test]
fn estimate_prints_json() {
    let out = lachesis(&["estimate", "--sampler", "uniform:1:8", "--x", "4", "--seed", "3"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let value = v["outcome"]["value"].as_f64().unwrap();
    assert!((0.1..=0.15).contains(&value), "{value}");
    assert!((v["target_mass"].as_f64().unwrap() - 0.125).abs() < 1e-12);
}
