use std::process::{Command, Output};

use serde_json::Value;

fn gaussglass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussglass"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn single_cell(beta: &str, lambda: &str, quantity: &str) -> Vec<String> {
    let o = gaussglass(&[
        "phase-scan",
        "--beta-min",
        beta,
        "--beta-steps",
        "1",
        "--lambda-min",
        lambda,
        "--lambda-steps",
        "1",
        "--quantity",
        quantity,
    ]);
    assert!(o.status.success());
    stdout(&o).lines().map(str::to_string).collect()
}

#[test]
fn scan_single_annealed_cell() {
    assert_eq!(single_cell("0.5", "0", "rs"), ["beta,lambda,value,regime", "0.5,0,0,annealed"]);
}

#[test]
fn scan_single_condensed_cell() {
    let rows = single_cell("2", "0", "rs");
    let fields: Vec<&str> = rows[1].split(',').collect();
    let value: f64 = fields[2].parse().unwrap();
    assert!((value + 0.034074).abs() < 5e-7, "{value}");
    assert_eq!(fields[3], "condensed");
}

#[test]
fn scan_across_lambda_one_marks_out_of_domain() {
    let o = gaussglass(&[
        "phase-scan",
        "--quantity",
        "annealed",
        "--beta-min",
        "0.5",
        "--beta-steps",
        "1",
        "--lambda-min",
        "0.5",
        "--lambda-max",
        "1.5",
        "--lambda-steps",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let regimes: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(regimes.len(), 5);
    assert_eq!(regimes[2..], ["out-of-domain"; 3]);
    assert!(text.contains("0.5,1,,out-of-domain"));
}

#[test]
fn scan_output_is_byte_stable() {
    let args = ["phase-scan", "--beta-steps", "7", "--lambda-steps", "5", "--quantity", "shell"];
    let a = gaussglass(&args);
    let b = gaussglass(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 36);
}

#[test]
fn scan_of_every_quantity_runs() {
    for q in ["annealed", "rs", "shell", "susceptibility", "rsb_check"] {
        let o = gaussglass(&[
            "phase-scan",
            "--quantity",
            q,
            "--beta-min",
            "0.5",
            "--beta-max",
            "2",
            "--beta-steps",
            "2",
            "--lambda-steps",
            "1",
            "--lambda-min",
            "0",
            "--restarts",
            "4",
        ]);
        assert!(o.status.success(), "{q}");
        assert_eq!(stdout(&o).lines().count(), 3, "{q}");
    }
}

#[test]
fn quenched_smoke_runs_respect_rs_bound() {
    for n in ["2", "3", "4"] {
        let o = gaussglass(&["quenched", "--beta", "0.5", "--lambda", "0", "--n", n, "--samples", "40", "--seed", "7"]);
        let v = json(&o);
        assert_eq!(v["checks"]["rs_bound"], Value::Bool(true), "N = {n}");
        assert_eq!(v["cfg"]["seed"], 7);
        assert_eq!(v["params"]["n_sites"].to_string(), n);
    }
}

#[test]
fn quenched_free_run_is_exact() {
    let v = json(&gaussglass(&["quenched", "--beta", "0", "--lambda", "0.3", "--n", "2", "--samples", "3"]));
    let est = &v["estimates"]["quenched_pressure"];
    assert_eq!(est["std_error"], 0.0);
    let exact = -0.5 * (-0.3f64).ln_1p();
    assert!((est["mean"].as_f64().unwrap() - exact).abs() < 1e-12);
}

#[test]
fn repeated_seed_gives_identical_json() {
    let args = ["quenched", "--n", "3", "--samples", "20", "--seed", "11"];
    let a = gaussglass(&args);
    let b = gaussglass(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["timestamp"], "2023-11-14T22:13:20Z");
}

#[test]
fn rs_eval_reports_closed_forms() {
    let v = json(&gaussglass(&["rs-eval", "--beta", "2", "--lambda", "0"]));
    assert_eq!(v["regime"], "condensed");
    assert!((v["q_bar"].as_f64().unwrap() - 0.25).abs() < 1e-15);
    let gap = v["rs_pressure"].as_f64().unwrap() - v["shell_bound"].as_f64().unwrap();
    assert!(gap.abs() < 1e-10);
}

#[test]
fn rsb_eval_recovers_rs_pressure() {
    let o = gaussglass(&["rsb-eval", "--beta", "2", "--lambda", "-0.5", "--levels", "2", "--restarts", "8"]);
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 0);
}

#[test]
fn fluctuations_match_annealed_susceptibility() {
    let v = json(&gaussglass(&["fluctuations", "--beta", "0.5", "--lambda", "0"]));
    assert!((v["triple"]["a"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-8);
}

#[test]
fn sum_rule_closes() {
    let o = gaussglass(&["sum-rule", "--beta", "0.5", "--n", "2", "--samples", "100", "--t-grid", "5"]);
    assert_eq!(json(&o)["passed"], true);
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "beta = 2.0\nlambda = 0.5\nformat = \"json\"\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = json(&gaussglass(&["rs-eval", "--config", cfg]));
    assert_eq!(from_file["beta"], 2.0);
    assert_eq!(from_file["lambda"], 0.5);
    let overridden = json(&gaussglass(&["rs-eval", "--config", cfg, "--beta", "1"]));
    assert_eq!(overridden["beta"], 1.0);
    assert_eq!(overridden["lambda"], 0.5);
    let defaults = json(&gaussglass(&["rs-eval"]));
    assert_eq!(defaults["beta"], 0.5);
    assert_eq!(defaults["lambda"], 0.0);
}

#[test]
fn empty_config_uses_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "").unwrap();
    let a = gaussglass(&["rs-eval", "--config", cfg.to_str().unwrap()]);
    let b = gaussglass(&["rs-eval"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "temperature = 3\n").unwrap();
    assert_eq!(gaussglass(&["rs-eval", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let o = gaussglass(&["phase-scan", "--beta-steps", "2", "--lambda-steps", "2", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(path).unwrap().starts_with("beta,lambda,value,regime\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(gaussglass(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(gaussglass(&["rs-eval", "--lambda", "2"]).status.code(), Some(2));
    assert_eq!(gaussglass(&["quenched", "--threads", "0"]).status.code(), Some(2));
}

#[test]
fn threads_do_not_change_results() {
    let base = ["quenched", "--n", "2", "--samples", "30", "--seed", "3"];
    let one = gaussglass(&[&base[..], &["--threads", "1"]].concat());
    let two = gaussglass(&[&base[..], &["--threads", "2"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn verify_fast_passes_with_table() {
    let o = gaussglass(&["verify", "--level", "fast"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains(" PASS ")).count(), 6);
    assert!(text.contains("6 of 6 criteria passed"));
}
