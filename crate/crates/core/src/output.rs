//! CSV and JSON writers for run metrics, comparisons, sweeps and audits.
//!
//! Floats are written with Rust's shortest round-trip formatting, so files
//! are byte-identical across runs of the same configuration.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::sim::{AuditRow, RunMetrics, SweepRow};

pub type Result<T> = std::result::Result<T, csv::Error>;

fn queue_headers(prefix: &str, rows: usize, cols: Option<usize>) -> Vec<String> {
    match cols {
        None => (0..rows).map(|m| format!("{prefix}_{m}")).collect(),
        Some(n) => (0..rows)
            .flat_map(|m| (0..n).map(move |j| format!("{prefix}_{m}_{j}")))
            .collect(),
    }
}

fn dims(metrics: &RunMetrics) -> (usize, usize) {
    let m = metrics.final_state.edge.len();
    let n = metrics.final_state.cloud.first().map_or(0, Vec::len);
    (m, n)
}

/// Per-slot metrics, one row per sampled slot.
pub fn write_metrics_csv<W: Write>(metrics: &RunMetrics, writer: W) -> Result<()> {
    let (m, n) = dims(metrics);
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = [
        "t",
        "emissions",
        "cumulative_emissions",
        "lyapunov",
        "drift",
        "dpp_value",
        "dpp_bound_rhs",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(queue_headers("edge_q", m, None));
    header.extend(queue_headers("cloud_q", m, Some(n)));
    w.write_record(&header)?;
    for s in &metrics.samples {
        let mut row = vec![
            s.t.to_string(),
            s.emissions.to_string(),
            s.cumulative_emissions.to_string(),
            s.lyapunov.to_string(),
            s.drift.to_string(),
            s.dpp_value.to_string(),
            s.dpp_bound_rhs.to_string(),
        ];
        row.extend(s.edge_q.iter().map(u64::to_string));
        row.extend(s.cloud_q.iter().flatten().map(u64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Nonzero dispatch/work entries, for replaying a run.
pub fn write_action_log_csv<W: Write>(metrics: &RunMetrics, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for e in &metrics.action_log {
        w.serialize(e)?;
    }
    if metrics.action_log.is_empty() {
        w.write_record(["t", "kind", "m", "n", "count"])?;
    }
    w.flush()?;
    Ok(())
}

/// Run summary with the resolved configuration echoed under `"config"`.
pub fn summary_json(metrics: &RunMetrics, config_echo: &Value) -> Value {
    json!({
        "policy": metrics.policy,
        "v": metrics.v,
        "seed": metrics.seed,
        "horizon": metrics.horizon,
        "cumulative_emissions": metrics.cumulative_emissions,
        "time_average_emissions": metrics.time_average_emissions,
        "avg_edge_queue": metrics.avg_edge_queue,
        "avg_cloud_queue": metrics.avg_cloud_queue,
        "mean_rate_ratio": metrics.mean_rate_ratio,
        "cloud_mean_rate_ratio": metrics.cloud_mean_rate_ratio,
        "max_mean_rate_ratio": metrics.max_mean_rate_ratio(),
        "b_estimate": metrics.b_estimate,
        "drift_bound_violations": metrics.drift_bound_violations,
        "config": config_echo,
    })
}

pub fn write_json<W: Write, T: Serialize>(value: &T, mut writer: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")
}

/// `1 − policy / baseline`; zero when the baseline emitted nothing.
pub fn reduction(policy_cumulative: f64, baseline_cumulative: f64) -> f64 {
    if baseline_cumulative == 0.0 {
        0.0
    } else {
        1.0 - policy_cumulative / baseline_cumulative
    }
}

/// Cumulative emissions normalised by the baseline's final total, plus the
/// running average of edge queue 0, for runs sampled on the same slots.
pub fn write_comparison_csv<W: Write>(
    labels: &[String],
    runs: &[&RunMetrics],
    baseline: &RunMetrics,
    writer: W,
) -> Result<()> {
    let norm = baseline.cumulative_emissions;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend(labels.iter().map(|l| format!("{l}_cum_norm")));
    header.extend(labels.iter().map(|l| format!("{l}_avg_edge_q0")));
    w.write_record(&header)?;
    for (i, s) in baseline.samples.iter().enumerate() {
        let mut row = vec![s.t.to_string()];
        for r in runs {
            let c = r.samples[i].cumulative_emissions;
            row.push(if norm == 0.0 { 0.0 } else { c / norm }.to_string());
        }
        for r in runs {
            row.push(r.samples[i].edge_q_time_avg[0].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let Some(first) = rows.first() else {
        w.write_record(["V", "avg_emissions"])?;
        w.flush()?;
        return Ok(());
    };
    let m = first.avg_edge_queue.len();
    let n = first.avg_cloud_queue.first().map_or(0, Vec::len);
    let mut header = vec!["V".to_string(), "avg_emissions".to_string()];
    header.extend(queue_headers("avg_edge_q", m, None));
    header.extend(queue_headers("avg_cloud_q", m, Some(n)));
    w.write_record(&header)?;
    for r in rows {
        let mut row = vec![r.v.to_string(), r.time_average_emissions.to_string()];
        row.extend(r.avg_edge_queue.iter().map(f64::to_string));
        row.extend(r.avg_cloud_queue.iter().flatten().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_audit_csv<W: Write>(rows: &[AuditRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "greedy_obj", "oracle_obj", "gap"])?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.greedy_obj.to_string(),
            r.oracle_obj.to_string(),
            r.gap.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
