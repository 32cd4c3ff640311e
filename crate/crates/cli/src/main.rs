//! `carbonq`: run, compare, sweep and audit experiment files.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid configuration,
//! 3 policy violation (infeasible or over-drawing action, failed audit).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use carbonq::experiment::{Experiment, ExperimentError, Overrides};
use carbonq::output::reduction;
use carbonq::sim::PolicyKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "carbonq", version, about = "Carbon-aware edge/cloud scheduling simulator")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment file (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, replacing `experiment.output_dir`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run this seed only
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of slots
    #[arg(long, global = true)]
    horizon: Option<u64>,
    /// Suppress per-run summaries
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate each listed policy on each seed
    Run {
        /// Run this policy only
        #[arg(long)]
        policy: Option<PolicyKind>,
    },
    /// Run all listed policies on shared seeds and report reductions
    Compare,
    /// Sweep V for the first listed policy
    Sweep {
        #[arg(long)]
        policy: Option<PolicyKind>,
    },
    /// Compare the greedy policy with the exact per-slot oracle
    Audit {
        /// Slots to audit, replacing `experiment.audit_slots`
        #[arg(long)]
        slots: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() {
                2
            } else if e.is_policy_violation() {
                3
            } else {
                1
            })
        }
    }
}

fn execute(cli: Cli) -> Result<(), ExperimentError> {
    let g = cli.global;
    let policy = match cli.command {
        Command::Run { policy } | Command::Sweep { policy } => policy,
        _ => None,
    };
    let config = g.config.clone().ok_or_else(|| {
        ExperimentError::Config(carbonq::experiment::ConfigError::Invalid {
            field: "--config".into(),
            message: "an experiment file is required".into(),
        })
    })?;
    let overrides = Overrides {
        seed: g.seed,
        horizon: g.horizon,
        policy,
        output_dir: g.out,
    };
    let exp = Experiment::load(&config, &overrides)?;
    let out = exp.output_dir().to_path_buf();
    let say = |line: String| {
        if !g.quiet {
            println!("{line}");
        }
    };

    match cli.command {
        Command::Run { .. } => {
            for m in exp.run_all()? {
                exp.write_run(&m, &run_dir(&out, m.policy, m.seed))?;
                say(format!(
                    "{} seed={} T={} avg_emissions={:.6} max_mean_rate_ratio={:.6}",
                    m.policy,
                    m.seed,
                    m.horizon,
                    m.time_average_emissions,
                    m.max_mean_rate_ratio()
                ));
            }
        }
        Command::Compare => {
            let cmp = exp.compare()?;
            exp.write_comparison(&cmp, &out)?;
            let base = &cmp.labels[cmp.baseline];
            for runs in &cmp.runs {
                let b = runs[cmp.baseline].cumulative_emissions;
                for (label, m) in cmp.labels.iter().zip(runs) {
                    say(format!(
                        "{label} seed={} avg_emissions={:.6} max_mean_rate_ratio={:.6} reduction_vs_{base}={:.2}%",
                        m.seed,
                        m.time_average_emissions,
                        m.max_mean_rate_ratio(),
                        100.0 * reduction(m.cumulative_emissions, b)
                    ));
                }
            }
            for (label, r) in cmp.labels.iter().zip(&cmp.reductions) {
                say(format!("mean reduction {label} vs {base}: {:.2}%", 100.0 * r));
            }
        }
        Command::Sweep { .. } => {
            let report = exp.sweep()?;
            exp.write_sweep(&report, &out)?;
            for r in &report.rows {
                say(format!(
                    "{} V={} avg_emissions={:.6} avg_edge_queue={:.3}",
                    report.policy,
                    r.v,
                    r.time_average_emissions,
                    r.mean_edge_queue()
                ));
            }
            say(format!(
                "spearman(V, emissions)={:.3} spearman(V, edge queue)={:.3}",
                report.mean_emissions_rho(),
                report.mean_edge_queue_rho()
            ));
        }
        Command::Audit { slots } => {
            let rows = exp.audit(slots)?;
            exp.write_audit(&rows, &out)?;
            let max_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
            let zero = rows.iter().filter(|r| r.gap == 0.0).count();
            say(format!(
                "audited {} slots: oracle <= greedy in all, {} with zero gap, max gap {:.6}",
                rows.len(),
                zero,
                max_gap
            ));
        }
    }
    Ok(())
}

fn run_dir(out: &Path, policy: PolicyKind, seed: u64) -> PathBuf {
    out.join(format!("{policy}_seed{seed}"))
}
