use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use delayed_hedge_cli::{run_config, ExperimentConfig, Kind};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_delayed-hedge"));
    c.env_remove("DELAYED_HEDGE_THREADS");
    c
}

fn fixtures(dir: &Path) {
    fs::write(dir.join("capped.json"), r#"{"breakpoints": [0, 1], "values": [0, 1]}"#).unwrap();
    fs::write(
        dir.join("fly.json"),
        r#"{"breakpoints": [-1, 0, 1], "values": [0, 1, 0]}"#,
    )
    .unwrap();
    fs::write(dir.join("params.json"), r#"{"s0": 0, "sigma": 1, "mu": 0, "T": 1}"#).unwrap();
    fs::write(
        dir.join("policy.json"),
        r#"{"partition": [0, 0.5, 1], "pieces": [{"x": [0], "nu": [2]}]}"#,
    )
    .unwrap();
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn envelope_of_capped_call_prices_at_one() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let o = run(
        dir.path(),
        &["envelope", "--payoff", "capped.json", "--params", "params.json"],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["price"], 1.0);
    assert_eq!(v["hedge_slope"], 0.0);
    assert!(v["hull_vertices"].is_array());
}

#[test]
fn missing_payoff_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let o = run(
        dir.path(),
        &["envelope", "--payoff", "nope.json", "--params", "params.json"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));
    let bad = run(
        dir.path(),
        &["price-limit", "--payoff", "fly.json", "--params", "params.json"],
    );
    assert_eq!(bad.status.code(), Some(2), "missing --A is a usage error");
}

#[test]
fn price_limit_and_discrete_outputs() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let o = run(
        dir.path(),
        &[
            "price-limit",
            "--payoff",
            "fly.json",
            "--params",
            "params.json",
            "--A",
            "1",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.634791).abs() < 1e-5);
    assert!(v["constraint_residual"].as_f64().unwrap() < 1e-8);

    let args = [
        "price-discrete",
        "--payoff",
        "fly.json",
        "--params",
        "params.json",
        "--N",
        "4",
        "--lambda",
        "4",
    ];
    let o = run(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,H,lambda,price,limit_value,gap"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(&row[..3], &[4.0, 0.25, 4.0]);
    assert!((row[3] - row[4] - row[5]).abs() < 1e-12);
}

#[test]
fn out_directory_gets_artifacts_and_a_summary_line() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let o = run(
        dir.path(),
        &[
            "price-limit",
            "--payoff",
            "fly.json",
            "--params",
            "params.json",
            "--A",
            "2",
            "--nodes",
            "12",
            "--out",
            "res",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    let summary: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(summary["status"], "pass");
    let profile = fs::read_to_string(dir.path().join("res/limit_profile.csv")).unwrap();
    assert_eq!(profile.lines().next(), Some("z,zeta"));
    assert_eq!(profile.lines().count(), 13);
    assert!(dir.path().join("res/limit.json").exists());
}

#[test]
fn config_checks_set_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let good = "kind = \"envelope\"\npayoff = \"capped.json\"\nparams = \"params.json\"\nout = \"env\"\n[check]\nexpect = 1.0\n";
    fs::write(dir.path().join("good.toml"), good).unwrap();
    let o = bin()
        .args(["run", "--config"])
        .arg(dir.path().join("good.toml"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("env/envelope.json").exists());

    fs::write(
        dir.path().join("bad.toml"),
        good.replace("expect = 1.0", "expect = 0.5"),
    )
    .unwrap();
    let o = bin()
        .args(["run", "--config"])
        .arg(dir.path().join("bad.toml"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["status"], "fail");
    assert_eq!(summary["failed"][0], "expect");

    fs::write(dir.path().join("broken.toml"), "kind = \"envelope\"\npayoff = 3\n").unwrap();
    let o = bin()
        .args(["run", "--config"])
        .arg(dir.path().join("broken.toml"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dual_sim_reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let args = |out: &'static str| {
        [
            "simulate-dual",
            "--policy",
            "policy.json",
            "--params",
            "params.json",
            "--payoff",
            "fly.json",
            "--H",
            "0.0625",
            "--A",
            "1",
            "--paths",
            "2000",
            "--seed",
            "11",
            "--out",
            out,
        ]
    };
    assert_eq!(run(dir.path(), &args("a")).status.code(), Some(0));
    let o = bin()
        .current_dir(dir.path())
        .env("DELAYED_HEDGE_THREADS", "2")
        .args(args("b"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    for name in ["dual_report.json", "martingale.csv"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let csv = fs::read_to_string(dir.path().join("a/martingale.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("s,t,test,statistic,stderr,z"));
    assert_eq!(csv.lines().count(), 1 + 3 * 7);
}

#[test]
fn convergence_config_in_process() {
    let dir = tempfile::tempdir().unwrap();
    fixtures(dir.path());
    let mut cfg = ExperimentConfig::new(Kind::Convergence);
    cfg.payoff = Some(dir.path().join("fly.json"));
    cfg.params = Some(dir.path().join("params.json"));
    cfg.a = Some(1.0);
    cfg.n = Some(delayed_hedge_cli::config::NList::Many(vec![2, 4]));
    cfg.check.monotone = true;
    cfg.check.max_gap = Some(0.5);
    let (outcome, written) = run_config(&cfg).unwrap();
    assert!(written.is_empty());
    assert!(outcome.passed(), "{:?}", outcome.checks);
    let csv = &outcome.artifacts[0].contents;
    assert!(csv.starts_with("N,H,lambda,price,limit_value,gap\n2,0.5,2,"));
}
