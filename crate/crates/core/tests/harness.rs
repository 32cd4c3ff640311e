use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use carbonq::experiment::{ConfigError, Experiment, Overrides};
use carbonq::model::presets;
use carbonq::sim::{run, PolicyKind, RunConfig, RunMetrics};
use carbonq::workload::{
    generate_carbon, synthetic, write_carbon_csv, ArrivalModel, CarbonModel,
};

fn configs_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn scenario(policy: PolicyKind, carbon: CarbonModel, horizon: u64, seed: u64) -> RunConfig {
    let mut c = RunConfig::new(
        presets::ai_training(5),
        policy,
        ArrivalModel::UniformIid {
            max_arrivals: 400,
            seed: 0,
        },
        carbon,
        horizon,
    );
    c.seed = seed;
    c.record_actions = true;
    c
}

fn uniform() -> CarbonModel {
    CarbonModel::UniformIid {
        max_intensity: 700.0,
        seed: 0,
    }
}

/// Emissions rebuilt from the action log and the intensity stream alone.
fn replay_emissions(cfg: &RunConfig, m: &RunMetrics) -> f64 {
    let spec = &cfg.spec;
    let carbon = cfg.carbon_model.reseeded(cfg.seed);
    let mut per_slot: HashMap<u64, f64> = HashMap::new();
    for e in &m.action_log {
        let c = generate_carbon(&carbon, spec.clouds(), e.t).unwrap();
        let g = match e.kind {
            'd' => e.count as f64 * spec.edge_send_energy()[e.m] * c.edge,
            'w' => e.count as f64 * spec.cloud_proc_energy()[e.m][e.n] * c.cloud[e.n],
            other => panic!("unknown action kind {other}"),
        };
        *per_slot.entry(e.t).or_default() += g;
    }
    per_slot.values().sum()
}

#[test]
fn emissions_match_action_log_replay() {
    for policy in [PolicyKind::CarbonIntensity, PolicyKind::QueueLength] {
        let cfg = scenario(policy, uniform(), 300, 4);
        let m = run(&cfg).unwrap();
        let replay = replay_emissions(&cfg, &m);
        let rel = (replay - m.cumulative_emissions).abs() / m.cumulative_emissions;
        assert!(rel < 1e-9, "{policy}: replay {replay} vs {}", m.cumulative_emissions);
    }
}

#[test]
fn baseline_emissions_are_linear_in_intensity() {
    let k = scenario(PolicyKind::QueueLength, CarbonModel::Constant { value: 137.0 }, 400, 2);
    let k2 = scenario(PolicyKind::QueueLength, CarbonModel::Constant { value: 274.0 }, 400, 2);
    let (a, b) = (run(&k).unwrap(), run(&k2).unwrap());
    assert_eq!(b.cumulative_emissions, 2.0 * a.cumulative_emissions);
    assert_eq!(a.final_state, b.final_state);
}

#[test]
fn baseline_ignores_intensity_stream() {
    let a = run(&scenario(PolicyKind::QueueLength, uniform(), 300, 3)).unwrap();
    let trace = Arc::new(synthetic::regional_trace(3, 1));
    let b = run(&scenario(PolicyKind::QueueLength, CarbonModel::CsvTrace { trace }, 300, 3)).unwrap();
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(a.action_log, b.action_log);
}

#[test]
fn runs_are_deterministic_and_cumulative_is_monotone() {
    let cfg = scenario(PolicyKind::CarbonIntensity, uniform(), 500, 11);
    let (a, b) = (run(&cfg).unwrap(), run(&cfg).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.action_log, b.action_log);
    assert!(a.samples.windows(2).all(|w| w[1].cumulative_emissions >= w[0].cumulative_emissions));
    assert!(a.samples.iter().all(|s| s.emissions >= 0.0));
    assert_eq!(a.time_average_emissions, a.cumulative_emissions / 500.0);
    assert_eq!(a.drift_bound_violations, 0);
    assert!(a.samples.iter().all(|s| s.dpp_value <= s.dpp_bound_rhs + 1e-6 * s.dpp_bound_rhs.abs().max(1.0)));
}

#[test]
fn different_seeds_give_different_streams() {
    let a = run(&scenario(PolicyKind::CarbonIntensity, uniform(), 50, 1)).unwrap();
    let b = run(&scenario(PolicyKind::CarbonIntensity, uniform(), 50, 2)).unwrap();
    assert_ne!(a.cumulative_emissions, b.cumulative_emissions);
}

#[test]
fn oracle_policy_runs_feasibly() {
    let mut cfg = scenario(PolicyKind::OracleExact, uniform(), 40, 5);
    cfg.record_actions = false;
    let m = run(&cfg).unwrap();
    assert_eq!(m.drift_bound_violations, 0);
}

#[test]
fn csv_trace_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let trace = synthetic::regional_trace(2, 9);
    let path = dir.path().join("regions.csv");
    write_carbon_csv(&trace, std::fs::File::create(&path).unwrap()).unwrap();
    let text = std::fs::read_to_string(configs_dir().join("synthetic-regional.toml"))
        .unwrap()
        .replace("synthetic-regional.csv", "regions.csv")
        .replace("horizon = 10000", "horizon = 200");
    let cfg_path = dir.path().join("exp.toml");
    std::fs::write(&cfg_path, text).unwrap();
    let exp = Experiment::load(&cfg_path, &Overrides { seed: Some(1), ..Default::default() }).unwrap();
    let cmp = exp.compare().unwrap();
    assert_eq!(cmp.runs.len(), 1);
    // 96 rows wrap twice over 200 slots
    assert!(cmp.reductions[0] > 0.0);
}

#[test]
fn bundled_configs_parse() {
    for name in ["paper-random.toml", "smoke.toml", "synthetic-regional.toml"] {
        let e = Experiment::load(&configs_dir().join(name), &Overrides::default())
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!e.policies().is_empty());
    }
    let e = Experiment::load(&configs_dir().join("paper-random.toml"), &Overrides::default()).unwrap();
    assert_eq!(e.spec().task_types(), 5);
    assert_eq!(e.spec().clouds(), 5);
    assert_eq!(e.file.policy.v, 0.05);
    assert_eq!(e.seeds().len(), 5);
}

#[test]
fn eso_config_needs_user_trace() {
    let err = Experiment::load(&configs_dir().join("paper-eso.toml"), &Overrides::default())
        .unwrap_err();
    assert!(matches!(err, ConfigError::Input { ref field, .. } if field == "carbon.path"), "{err}");
}

#[test]
fn library_matches_experiment_layer() {
    let e = Experiment::load(&configs_dir().join("smoke.toml"), &Overrides::default()).unwrap();
    let via_exp = e.run_all().unwrap();
    for m in via_exp {
        let direct = run(&e.run_config(m.policy, m.seed)).unwrap();
        assert_eq!(m, direct);
    }
}
