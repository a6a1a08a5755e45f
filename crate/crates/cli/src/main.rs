use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use switchopt_cli::{
    load_config, parse_config, run_checks, run_filter, run_pipeline, run_solve, CheckOptions, RunConfig,
    Stage, StageError,
};

#[derive(Parser)]
#[command(name = "switchopt", version, about = "Switched optimal control with dwell-time filtering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the embedded problem and export v and x.
    Solve(Common),
    /// Solve, then filter with the configured dwell time.
    Filter(Common),
    /// Solve once and filter for every dwell time of the sweep.
    Pipeline(Common),
    /// Run the diagnostic checks; exits nonzero on any failure.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; the builtin benchmark when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dwell time in seconds (overrides `dwell_time`; for `pipeline`,
    /// replaces the sweep).
    #[arg(long)]
    dwell: Option<f64>,
    #[arg(long)]
    resolve_tail: bool,
    /// Accepted for harness compatibility; every run is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

fn configure(common: &Common, sweep: bool) -> Result<RunConfig, StageError> {
    let mut config = match &common.config {
        Some(path) => load_config(path),
        None => parse_config("{}"),
    }
    .map_err(|e| StageError::new(Stage::Config, e))?;
    if let Some(dwell) = common.dwell {
        config.dwell_time = dwell;
        if sweep {
            config.dwell_sweep = vec![dwell];
        }
    }
    if common.resolve_tail {
        config.filter.resolve_tail = true;
    }
    if let Some(out) = &common.out {
        config.output_dir = Some(out.clone());
    }
    config.validate().map_err(|e| StageError::new(Stage::Config, e))?;
    Ok(config)
}

fn run(cli: Cli) -> Result<bool, StageError> {
    match cli.command {
        Command::Solve(c) => {
            let config = configure(&c, false)?;
            let summary = run_solve(&config, &config.output_dir())?;
            println!(
                "objective {:.6}, {} switches, converged {}",
                summary.objective, summary.switch_count, summary.converged
            );
        }
        Command::Filter(c) => {
            let config = configure(&c, false)?;
            let summary = run_filter(&config, &config.output_dir())?;
            println!(
                "T = {}: {} switches, cost {:.6} (unfiltered {:.6})",
                summary.dwell_time, summary.switch_count, summary.filtered_cost, summary.input_cost
            );
        }
        Command::Pipeline(c) => {
            let config = configure(&c, true)?;
            let report = run_pipeline(&config, &config.output_dir())?;
            for s in &report.stages {
                println!(
                    "T = {}: {} switches, cost {:.6}",
                    s.dwell_time, s.switch_count, s.filtered_cost
                );
            }
        }
        Command::Check(c) => {
            let config = configure(&c, false)?;
            let report = run_checks(&config, &CheckOptions::default())?;
            print!("{}", report.table());
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
