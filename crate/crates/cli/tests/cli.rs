use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ppsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppsim"))
        .args(args)
        .output()
        .expect("spawn ppsim")
}

fn write_config(dir: &Path, name: &str, out: &Path, policies: &str, extra: &str) -> String {
    let grid: Vec<String> = (1..=20).map(|i| (i * 1000).to_string()).collect();
    let body = format!(
        r#"{{
  "name": "{name}",
  "instance": {{"key": "blooper", "params": {{}}}},
  "policies": {policies},
  "t_grid": [{}],
  "replications": 2,
  "master_seed": 17,
  "output_dir": {},
  "trace_samples": 1{extra}
}}"#,
        grid.join(", "),
        json_path(out)
    );
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn json_path(p: &Path) -> String {
    format!("\"{}\"", p.display().to_string().replace('\\', "\\\\"))
}

#[test]
fn run_writes_one_row_per_policy_and_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), "blooper", &out, r#"["ucb", "ts"]"#, "");
    let o = ppsim(&["run", "--config", &config, "--threads", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,instance,policy,T,M,K,replications,mean_regret,stderr_regret,mean_refund,\
refund_portion,mean_drops,phase_count_max,master_seed"
    );
    assert_eq!(lines.count(), 40);
    assert!(!csv.contains('\r'));
    let trace = fs::read_to_string(out.join("trace_ucb_0.csv")).unwrap();
    assert!(trace.starts_with("t,price_index,price,demand,gross_reward,instant_refund,net_revenue\n"));
    assert_eq!(trace.lines().count(), 20_001);
    assert!(out.join("trace_ts_0.csv").exists());
}

#[test]
fn output_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "1", "4", "8"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let config = write_config(dir.path(), &format!("det{i}"), &out, r#"["ts_pp", "leap"]"#, "");
        let o = ppsim(&["run", "--config", &config, "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let csv = fs::read_to_string(out.join("results.csv")).unwrap();
        // Only the experiment name differs between the configs.
        outputs.push(csv.replace(&format!("det{i},"), "det,"));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn zero_protection_period_never_refunds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), "m0", &out, r#"["ucb", "alternate"]"#, r#", "m_rule": 0"#);
    assert!(ppsim(&["run", "--config", &config]).status.success());
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[4], "0");
        assert_eq!(fields[9], "0.0");
    }
}

#[test]
fn schema_errors_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let empty = write_config(dir.path(), "empty", &out, "[]", "");
    let o = ppsim(&["run", "--config", &empty]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("policies"));
    let unknown = write_config(dir.path(), "unknown", &out, r#"["ucb"]"#, r#", "colour": "red""#);
    assert_eq!(ppsim(&["run", "--config", &unknown]).status.code(), Some(1));
    assert_eq!(ppsim(&["figures", "--preset", "fig5", "--out", "x"]).status.code(), Some(1));
    assert_eq!(ppsim(&["frobnicate"]).status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn runtime_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let config = write_config(dir.path(), "blocked", &blocker.join("sub"), r#"["ucb"]"#, "");
    assert_eq!(ppsim(&["run", "--config", &config]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(
        ppsim(&["run", "--config", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn figures_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = ppsim(&["figures", "--preset", "fig10", "--reps", "2", "--out", out, "--t-grid", "200,400"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(dir.path().join("fig10a.csv")).unwrap().lines().count(), 9);
    assert!(dir.path().join("fig10b.csv").exists());
}

#[test]
fn verify_passes() {
    let o = ppsim(&["verify"]);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.lines().all(|l| l.starts_with("PASS")), "{table}");
}
