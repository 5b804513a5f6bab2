//! Command-line front end: run single episodes, reproduce figure sweeps,
//! recompute metrics from stored traces, and check the learning core
//! against the value-iteration reference.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use femtoq::mdp::policy_recovery_trial;
use femtoq::metrics::{convergence_metrics, default_window, jain_index, per_femto_window_capacity};
use femtoq::sim::{
    read_trace_csv, run_episode, trace_csv_string, Checkpoint, Episode, RunTrace, SimConfig,
};
use femtoq::sweep::{directional_checks, run_sweep, SweepSpec};

/// Environment variable holding the default output directory.
const OUT_DIR_ENV: &str = "FEMTOQ_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "femtoq",
    version,
    about = "Cognitive femtocell power-control simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode from a config file and write its trace.
    Run {
        /// Episode config (TOML). Defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default: $FEMTOQ_OUT_DIR or ./femtoq-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Resume from a checkpoint file instead of starting fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Write a checkpoint after this many iterations.
        #[arg(long)]
        checkpoint_at: Option<usize>,
        /// Skip writing the (large) per-step trace CSV.
        #[arg(long)]
        no_trace: bool,
        /// Re-run and verify determinism plus trace invariants; nonzero
        /// exit on any failure.
        #[arg(long)]
        check: bool,
    },
    /// Run an experiment sweep and emit figure CSVs plus a manifest.
    Sweep {
        /// Sweep config (TOML). Defaults to the full figure grid.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory override.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate the directional orderings the sweep covers; nonzero
        /// exit if any fails.
        #[arg(long)]
        check: bool,
    },
    /// Recompute metrics from a stored trace CSV.
    Report {
        #[arg(long)]
        trace: PathBuf,
        /// Target macro capacity (bits/sec/Hz).
        #[arg(long, default_value_t = 6.0)]
        target: f64,
        #[arg(long, default_value_t = 0.5)]
        band: f64,
        #[arg(long, default_value_t = 100)]
        hold: usize,
        /// Nonzero exit when the trace did not converge into the band.
        #[arg(long)]
        check: bool,
    },
    /// Check tabular Q-learning against the value-iteration reference on
    /// random MDPs.
    OracleCheck {
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        /// Nonzero exit unless at least 9 of 10 (scaled) trials pass.
        #[arg(long)]
        check: bool,
    },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            resume,
            checkpoint_at,
            no_trace,
            check,
        } => cmd_run(config, out, seed, resume, checkpoint_at, no_trace, check),
        Command::Sweep { config, out, check } => cmd_sweep(config, out, check),
        Command::Report {
            trace,
            target,
            band,
            hold,
            check,
        } => cmd_report(trace, target, band, hold, check),
        Command::OracleCheck {
            seeds,
            steps,
            check,
        } => cmd_oracle_check(seeds, steps, check),
    }
}

fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("femtoq-out"))
}

fn load_sim_config(path: Option<&Path>) -> anyhow::Result<SimConfig> {
    match path {
        Some(p) => {
            let text =
                fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            Ok(SimConfig::from_toml_str(&text)?)
        }
        None => Ok(SimConfig::default()),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    resume: Option<PathBuf>,
    checkpoint_at: Option<usize>,
    no_trace: bool,
    check: bool,
) -> anyhow::Result<()> {
    let out_dir = resolve_out_dir(out);
    fs::create_dir_all(&out_dir)?;

    let trace = if let Some(cp_path) = resume {
        let text = fs::read_to_string(&cp_path)
            .with_context(|| format!("reading checkpoint {}", cp_path.display()))?;
        let cp: Checkpoint = serde_json::from_str(&text)?;
        let cfg = cp.config.clone();
        let mut episode = Episode::restore(cp)?;
        let start = episode.iteration();
        println!("resumed at iteration {start} of {}", cfg.q_iterations);
        let records = episode.run_remaining()?;
        RunTrace::with_start(cfg, start, records)?
    } else {
        let mut cfg = load_sim_config(config.as_deref())?;
        if let Some(s) = seed {
            cfg.rng_seed = s;
        }
        cfg.validate()?;
        let mut episode = Episode::new(&cfg)?;
        fs::write(out_dir.join("topology.json"), episode.topology().to_json()?)?;

        let mut records = Vec::with_capacity(cfg.q_iterations);
        while !episode.is_done() {
            records.push(episode.step()?);
            if checkpoint_at == Some(episode.iteration()) {
                let cp = episode.checkpoint();
                let path = out_dir.join("checkpoint.json");
                fs::write(&path, serde_json::to_string_pretty(&cp)?)?;
                println!("checkpoint written to {}", path.display());
            }
        }
        RunTrace::new(cfg, records)?
    };

    if !no_trace {
        let path = out_dir.join("trace.csv");
        fs::write(&path, trace_csv_string(&trace)?)?;
        println!("trace written to {}", path.display());
    }
    let summary_json = serde_json::to_string_pretty(&trace.summary)?;
    fs::write(out_dir.join("summary.json"), &summary_json)?;
    println!("{summary_json}");

    if check {
        run_self_checks(&trace)?;
    }
    Ok(())
}

/// Invariant checks over a finished run: determinism, action legality,
/// update accounting, the overhead ledger and reward bounds.
fn run_self_checks(trace: &RunTrace) -> anyhow::Result<()> {
    let cfg = &trace.config;
    let mut failures = 0;
    let mut report = |name: &str, ok: bool| {
        println!("check {}: {name}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    let again = run_episode(cfg)?;
    report(
        "determinism (byte-identical re-run)",
        trace_csv_string(&again)? == trace_csv_string(trace)?,
    );

    let actions = cfg.action_set()?;
    report(
        "action legality",
        trace
            .records
            .iter()
            .all(|r| r.steps.iter().all(|s| actions.contains(s.action_dbm))),
    );

    report(
        "update accounting (n_sub steps per agent per iteration)",
        trace
            .records
            .iter()
            .all(|r| r.steps.len() == cfg.n_femto * cfg.n_sub),
    );

    let per_iter = match cfg.paradigm {
        femtoq::sim::Paradigm::Cl => {
            cfg.n_sub as u64 * cfg.n_femto as u64 * (cfg.n_femto as u64 - 1) * actions.len() as u64
        }
        femtoq::sim::Paradigm::Il => 0,
    };
    report(
        "overhead ledger matches the closed form",
        trace
            .records
            .iter()
            .enumerate()
            .all(|(t, r)| r.shared_entries == (t as u64 + 1) * per_iter),
    );

    report(
        "reward bounds",
        trace
            .records
            .iter()
            .all(|r| r.steps.iter().all(|s| cfg.reward.bounds_ok(s.reward))),
    );

    if failures > 0 {
        bail!("{failures} self-check(s) failed");
    }
    Ok(())
}

fn cmd_sweep(config: Option<PathBuf>, out: Option<PathBuf>, check: bool) -> anyhow::Result<()> {
    let mut spec = match config {
        Some(p) => {
            let text = fs::read_to_string(&p)
                .with_context(|| format!("reading sweep config {}", p.display()))?;
            SweepSpec::from_toml_str(&text)?
        }
        None => SweepSpec::default(),
    };
    if let Some(dir) = out {
        spec.output_dir = dir;
    } else if spec.output_dir == SweepSpec::default().output_dir {
        spec.output_dir = resolve_out_dir(None);
    }

    let episodes = spec.points().len() * spec.seeds.len();
    println!(
        "running {episodes} episodes into {}",
        spec.output_dir.display()
    );
    let outcome = run_sweep(&spec)?;
    for dataset in &outcome.datasets {
        println!(
            "figure_{}.csv: {} series",
            dataset.figure_id,
            dataset.series.len()
        );
    }
    let failed: usize = outcome.results.iter().map(|p| p.failures.len()).sum();
    if failed > 0 {
        println!("{failed} episode(s) failed; see manifest.json");
    }

    if check {
        let checks = directional_checks(&spec, &outcome.results);
        let mut failures = 0;
        for c in &checks {
            println!(
                "check {}: {} ({})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
            if !c.pass {
                failures += 1;
            }
        }
        if failures > 0 {
            bail!("{failures} directional check(s) failed");
        }
    }
    Ok(())
}

fn cmd_report(
    trace_path: PathBuf,
    target: f64,
    band: f64,
    hold: usize,
    check: bool,
) -> anyhow::Result<()> {
    let file = fs::File::open(&trace_path)
        .with_context(|| format!("opening trace {}", trace_path.display()))?;
    let loaded = read_trace_csv(file)?;
    let window = default_window(loaded.records.len());
    let aggregate = femtoq::metrics::aggregate_femto_capacity(&loaded.records, window.clone())?;
    let per_femto =
        per_femto_window_capacity(&loaded.records, loaded.n_femto, loaded.n_sub, window)?;
    let jain = jain_index(&per_femto)?;
    let convergence = convergence_metrics(&loaded.records, target, band, hold)?;

    let report = serde_json::json!({
        "iterations": loaded.records.len(),
        "n_femto": loaded.n_femto,
        "n_sub": loaded.n_sub,
        "aggregate_femto_capacity": aggregate,
        "per_femto_capacity": per_femto,
        "jain_index": jain,
        "convergence": convergence,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);

    if check && !convergence.converged {
        bail!("trace did not converge into the +/-{band} band");
    }
    Ok(())
}

fn cmd_oracle_check(seeds: u64, steps: usize, check: bool) -> anyhow::Result<()> {
    let started = std::time::Instant::now();
    let mut passed = 0;
    for seed in 0..seeds {
        let trial = policy_recovery_trial(seed, steps);
        let ok = trial.passes(0.05);
        if ok {
            passed += 1;
        }
        println!(
            "seed {seed}: {} (policy match {}, value error {:.4} of sup {:.4})",
            if ok { "PASS" } else { "FAIL" },
            trial.policy_matches,
            trial.value_sup_error,
            trial.v_star_sup
        );
    }
    // Same 9-in-10 bar as the acceptance suite, scaled to the trial count.
    let required = (seeds as f64 * 0.9).ceil() as u64;
    println!(
        "{passed}/{seeds} trials passed in {:.2}s (required: {required})",
        started.elapsed().as_secs_f64()
    );
    if check && passed < required {
        bail!("only {passed}/{seeds} oracle trials passed");
    }
    Ok(())
}
