use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_carbonq"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn carbonq(args: &[&str], config: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

const ZERO_ARRIVALS: &str = r#"
[network]
edge_send_energy = [3.45, 3.45]
cloud_proc_energy = [[74.0], [5.8]]
edge_budget = 400.0
cloud_budget = [3000.0]

[arrivals]
kind = "constant"
value = 0

[carbon]
kind = "uniform_iid"
max_intensity = 700.0

[experiment]
policies = ["carbon_intensity", "queue_length"]
horizon = 20
seeds = [1]
"#;

#[test]
fn run_writes_metrics_and_summary() {
    let out = tempfile::tempdir().unwrap();
    let o = carbonq(&["run"], &configs().join("smoke.toml"), out.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 3);
    assert!(stdout.contains("max_mean_rate_ratio="));
    let dir = out.path().join("carbon_intensity_seed7");
    let h = header(&dir.join("metrics.csv"));
    assert_eq!(
        h,
        "t,emissions,cumulative_emissions,lyapunov,drift,dpp_value,dpp_bound_rhs,edge_q_0,edge_q_1,cloud_q_0_0,cloud_q_1_0"
    );
    assert_eq!(header(&dir.join("actions.csv")), "t,kind,m,n,count");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 7);
    assert!(summary["b_estimate"].is_number());
    assert_eq!(summary["config"]["experiment"]["seeds"][0], 7);
    assert_eq!(summary["config"]["network"]["edge_budget"], 400.0);
}

#[test]
fn single_idle_slot_reports_zero_emissions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.toml");
    fs::write(&cfg, ZERO_ARRIVALS).unwrap();
    let o = carbonq(
        &["run", "--horizon", "1", "--policy", "queue_length"],
        &cfg,
        &dir.path().join("out"),
    );
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.contains("queue_length seed=1 T=1 avg_emissions=0.000000"), "{stdout}");
}

#[test]
fn compare_writes_normalised_table() {
    let out = tempfile::tempdir().unwrap();
    let o = carbonq(&["compare", "--horizon", "60"], &configs().join("smoke.toml"), out.path());
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("mean reduction carbon_intensity vs queue_length:"));
    let h = header(&out.path().join("compare_seed7.csv"));
    assert!(h.starts_with("t,carbon_intensity_cum_norm,queue_length_cum_norm,oracle_exact_cum_norm"));
    let last = fs::read_to_string(out.path().join("compare_seed7.csv")).unwrap();
    let last = last.lines().last().unwrap().split(',').collect::<Vec<_>>();
    assert_eq!(last[2], "1");
    assert!(out.path().join("compare_summary.json").exists());
}

#[test]
fn identical_policies_reduce_by_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("twice.toml");
    let text = fs::read_to_string(configs().join("smoke.toml")).unwrap().replace(
        "policies = [\"carbon_intensity\", \"queue_length\", \"oracle_exact\"]\nbaseline = \"queue_length\"",
        "policies = [\"carbon_intensity\", \"carbon_intensity\"]",
    );
    fs::write(&cfg, text).unwrap();
    let o = carbonq(&["compare", "--horizon", "40"], &cfg, &dir.path().join("out"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("mean reduction carbon_intensity_2 vs carbon_intensity: 0.00%"), "{stdout}");
}

#[test]
fn zero_intensity_compare_is_zero_percent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dark.toml");
    let text = ZERO_ARRIVALS
        .replace("kind = \"constant\"\nvalue = 0", "kind = \"uniform_iid\"\nmax_arrivals = 30")
        .replace("kind = \"uniform_iid\"\nmax_intensity = 700.0", "kind = \"constant\"\nvalue = 0.0");
    fs::write(&cfg, text).unwrap();
    let o = carbonq(&["compare"], &cfg, &dir.path().join("out"));
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("mean reduction carbon_intensity vs queue_length: 0.00%"), "{stdout}");
}

#[test]
fn sweep_table_has_one_row_per_v() {
    let out = tempfile::tempdir().unwrap();
    let o = carbonq(&["sweep", "--horizon", "80"], &configs().join("smoke.toml"), out.path());
    assert!(o.status.success());
    let text = fs::read_to_string(out.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "V,avg_emissions,avg_edge_q_0,avg_edge_q_1,avg_cloud_q_0_0,avg_cloud_q_1_0"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0.01,"));
}

#[test]
fn audit_writes_gap_table() {
    let out = tempfile::tempdir().unwrap();
    let o = carbonq(&["audit", "--slots", "25"], &configs().join("smoke.toml"), out.path());
    assert!(o.status.success());
    let text = fs::read_to_string(out.path().join("audit.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,greedy_obj,oracle_obj,gap");
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ZERO_ARRIVALS.replace("horizon = 20", "horizon = 20\nunknown_key = 1"),
        ZERO_ARRIVALS.replace("horizon = 20", "horizon = 0"),
        ZERO_ARRIVALS.replace("edge_budget = 400.0", "edge_budget = -4.0"),
        ZERO_ARRIVALS.replace("[[74.0], [5.8]]", "[[74.0]]"),
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = dir.path().join(format!("bad{i}.toml"));
        fs::write(&cfg, text).unwrap();
        let o = carbonq(&["run"], &cfg, &dir.path().join("out"));
        assert_eq!(o.status.code(), Some(2), "case {i}");
        assert!(!o.stderr.is_empty());
    }
    let o = carbonq(&["run"], &dir.path().join("missing.toml"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("run").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, ZERO_ARRIVALS.replace("seeds = [1]", "seeds = []")).unwrap();
    let o = carbonq(&["run"], &cfg, dir.path());
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment.seeds"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for out in [a.path(), b.path()] {
        let o = carbonq(&["run", "--quiet"], &configs().join("smoke.toml"), out);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    for p in ["carbon_intensity", "queue_length", "oracle_exact"] {
        let f = format!("{p}_seed7/metrics.csv");
        assert_eq!(fs::read(a.path().join(&f)).unwrap(), fs::read(b.path().join(&f)).unwrap());
    }
}
