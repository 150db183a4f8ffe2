use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_singer-kit")).args(args).output().expect("spawn singer-kit")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_lines(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

const LOGISTIC: &[&str] = &["--map", "mu*x*(1-x)", "--domain", "0,1"];

fn with(cmd: &str, extra: &[&str]) -> Vec<String> {
    let mut v = vec![cmd.to_string()];
    v.extend(LOGISTIC.iter().map(|s| s.to_string()));
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn run_with(cmd: &str, extra: &[&str]) -> Output {
    let args = with(cmd, extra);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&refs)
}

#[test]
fn schwarzian_json_is_negative_for_logistic() {
    let o = run_with("schwarzian", &["--param", "mu=3.8"]);
    assert!(o.status.success());
    let recs = json_lines(&o);
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    assert_eq!(r["command"], "schwarzian");
    assert!(r["scan"]["max"]["s"].as_f64().unwrap() < 0.0);
    assert_eq!(r["scan"]["verdict"], "no_counterexample_on_grid");
    assert_eq!(r["settings"]["grid_size"], 4096);
    assert_eq!(r["params"]["mu"], 3.8);
    assert!(r["composition"]["max_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn constant_map_has_undefined_schwarzian() {
    let o = run_with("schwarzian", &["--param", "mu=0"]);
    assert!(o.status.success());
    let r = &json_lines(&o)[0];
    assert_eq!(r["scan"]["defined"], 0);
    assert_eq!(r["scan"]["verdict"], "no_defined_samples");
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(run(&["schwarzian", "--domain", "0,1"]).status.code(), Some(2));
    assert_eq!(run_with("minprinciple", &["--param", "mu=3.8", "--n", "0"]).status.code(), Some(2));
    assert_eq!(run_with("scan", &["--sweep", "mu=2.8:4.0:0"]).status.code(), Some(2));
    assert_eq!(run_with("scan", &["--sweep", "mu=2.8:4.0:-0.1"]).status.code(), Some(2));
    assert_eq!(run_with("schwarzian", &[]).status.code(), Some(2), "unbound parameter");
    assert_eq!(run(&["schwarzian", "--map", "x @ 2"]).status.code(), Some(2));
    let o = run(&["schwarzian", "--map", "x", "--domain", "1,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn numeric_failure_exits_three() {
    // the orbit of 0.3 leaves the domain
    let o = run(&["scan", "--map", "2*x", "--domain", "0,1", "--x0", "0.3"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numeric failure"));
}

#[test]
fn minprinciple_examples() {
    let o = run_with("minprinciple", &["--param", "mu=3.8", "--n-range", "1:6"]);
    let recs = json_lines(&o);
    assert_eq!(recs.len(), 6);
    assert!(recs.iter().all(|r| r["report"]["violations"].as_array().unwrap().is_empty()));

    let o = run(&["minprinciple", "--map", "x^3/3 + 0.1*x", "--domain", "-1,1"]);
    let r = &json_lines(&o)[0];
    let v = r["report"]["violations"].as_array().unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0]["kind"], "local_min");
    assert!((v[0]["g_value"].as_f64().unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn singer_sweep_csv_has_one_row_per_value() {
    let o = run_with("singer", &["--sweep", "mu=2.5:3.56:0.01", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[0], "mu");
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 107);
    for r in &rows {
        assert_eq!(&r[col("pass")], "true", "{r:?}");
        assert_eq!(&r[col("attractors")], "1");
        assert!(!r[col("basin")].is_empty());
        assert!(!r[col("multiplier")].is_empty());
    }
    assert_eq!(&rows[70][0], "3.2");
}

#[test]
fn missing_domain_warns_and_defaults() {
    let o = run(&["singer", "--map", "mu*x*(1-x)", "--param", "mu=3.2"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let r = &json_lines(&o)[0];
    assert_eq!(r["domain"]["lo"], 0.0);
    assert_eq!(r["domain"]["hi"], 1.0);
    assert_eq!(r["report"]["pass"], true);
}

#[test]
fn identity_records_and_sign() {
    let o = run_with("identity", &["--param", "mu=3.8", "--n-range", "1:5", "--format", "csv"]);
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert!(!rows.is_empty());
    for r in &rows {
        assert_eq!(&r[9], "-1");
    }

    let o = run(&["identity", "--map", "x^3/3 + 0.1*x", "--domain", "-1,1", "--n", "1"]);
    let r = &json_lines(&o)[0];
    let at_zero = r["checks"].as_array().unwrap().iter().find(|c| c["x"].as_f64().unwrap().abs() < 1e-8).unwrap();
    assert!(at_zero["quotient"].as_f64().unwrap() > 0.0);
    assert!(at_zero["final_identity_residual"].as_f64().unwrap() < 1e-9);

    // a monotone square has no critical points of its derivative on this domain
    let o = run(&["identity", "--map", "x^2", "--domain", "0.1,0.9"]);
    assert!(o.status.success());
    assert!(json_lines(&o)[0]["checks"].as_array().unwrap().is_empty());
}

#[test]
fn scan_rows_per_cluster() {
    let o = run_with("scan", &["--sweep", "mu=2.9:3.5:0.3", "--format", "csv"]);
    let text = stdout(&o);
    let counts: Vec<usize> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    // mu = 2.9 -> 1 cluster, 3.2 -> 2 clusters, 3.5 -> 4 clusters
    assert_eq!(counts, vec![1, 2, 2, 4, 4, 4, 4]);

    let o = run_with("scan", &["--param", "mu=3.2", "--format", "text"]);
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn out_file_matches_stdout_and_text_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.jsonl");
    let direct = run_with("singer", &["--param", "mu=3.3"]);
    let filed = run_with("singer", &["--param", "mu=3.3", "--out", path.to_str().unwrap()]);
    assert!(filed.status.success() && filed.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);

    let o = run_with("singer", &["--param", "mu=3.3", "--format", "text"]);
    let text = stdout(&o);
    assert!(text.starts_with("singer mu=3.3"));
    assert!(text.contains("pass"));
}

#[test]
fn seed_controls_spot_checks() {
    let a = run_with("schwarzian", &["--param", "mu=3.7", "--seed", "1"]);
    let b = run_with("schwarzian", &["--param", "mu=3.7", "--seed", "1"]);
    let c = run_with("schwarzian", &["--param", "mu=3.7", "--seed", "2"]);
    assert_eq!(a.stdout, b.stdout);
    let ra = &json_lines(&a)[0];
    let rc = &json_lines(&c)[0];
    assert_eq!(ra["seed"], 1);
    assert_ne!(ra["composition"], rc["composition"]);
}
