//! Command-line front end: run one scenario, execute an experiment plan, or
//! analyze an event log for attack placement.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nocsim::analyze::plan_attack_from_log;
use nocsim::config::{ConfigError, PlanConfig, ScenarioConfig};
use nocsim::metrics::EVENT_HEADER;
use nocsim::sim::{Engine, SimError};
use nocsim::sweep::run_sweep;

#[derive(Parser)]
#[command(name = "nocsim", version, about = "Cycle-level 2D-mesh NoC simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario config and report metrics as CSV.
    Simulate {
        /// Scenario config file.
        config: PathBuf,
        /// Override the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the per-flit event log to this file.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Write metrics CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Validate the config and exit without simulating.
        #[arg(long)]
        validate_only: bool,
    },
    /// Run an experiment plan and write metrics plus per-series data files.
    Sweep {
        /// Plan config file.
        plan: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank Trojan placement candidates from a recorded event log.
    Analyze {
        /// Event log CSV produced by `simulate --log`.
        trace: PathBuf,
        /// Number of placements to print.
        #[arg(long, default_value_t = 3)]
        plan_attack: usize,
    },
}

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_WATCHDOG: u8 = 3;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn config_exit(e: &ConfigError) -> u8 {
    match e {
        ConfigError::Io { .. } => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

fn simulate(
    config: PathBuf,
    seed: Option<u64>,
    log: Option<PathBuf>,
    out: Option<PathBuf>,
    validate_only: bool,
) -> ExitCode {
    let mut cfg = match ScenarioConfig::load(&config) {
        Ok(c) => c,
        Err(e) => return fail(config_exit(&e), e),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let mut eng = match Engine::new(cfg) {
        Ok(e) => e,
        Err(SimError::Validation(e)) => return fail(config_exit(&e), e),
        Err(e) => return fail(EXIT_WATCHDOG, e),
    };
    if validate_only {
        println!("ok: {}", config.display());
        return ExitCode::SUCCESS;
    }
    eng.set_event_log(log.is_some());
    if let Err(e) = eng.run() {
        return fail(EXIT_WATCHDOG, e);
    }
    if let Some(path) = &log {
        let mut text = String::from(EVENT_HEADER);
        text.push('\n');
        for ev in eng.events() {
            text.push_str(&ev.csv_line());
            text.push('\n');
        }
        if let Err(e) = std::fs::write(path, text) {
            return fail(EXIT_IO, format!("{}: {e}", path.display()));
        }
    }
    let report = eng.report();
    let csv = format!("{}\n{}\n", nocsim::metrics::MetricsReport::csv_header(), report.csv_row());
    match &out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, csv) {
                return fail(EXIT_IO, format!("{}: {e}", path.display()));
            }
        }
        None => print!("{csv}"),
    }
    ExitCode::SUCCESS
}

fn sweep(plan: PathBuf, out: PathBuf) -> ExitCode {
    let plan = match PlanConfig::load(&plan) {
        Ok(p) => p,
        Err(e) => return fail(config_exit(&e), e),
    };
    let result = match run_sweep(&plan) {
        Ok(r) => r,
        Err(SimError::Validation(e)) => return fail(config_exit(&e), e),
        Err(e) => return fail(EXIT_WATCHDOG, e),
    };
    if let Err(e) = std::fs::create_dir_all(&out) {
        return fail(EXIT_IO, format!("{}: {e}", out.display()));
    }
    let mut files = vec![("metrics.csv".to_string(), result.metrics_csv.clone())];
    files.extend(result.series.iter().cloned());
    if !result.aborts.is_empty() {
        files.push(("aborts.txt".to_string(), result.aborts.join("\n") + "\n"));
    }
    for (name, contents) in &files {
        let path = out.join(name);
        if let Err(e) = std::fs::write(&path, contents) {
            return fail(EXIT_IO, format!("{}: {e}", path.display()));
        }
    }
    eprintln!(
        "{} runs, {} aborted; wrote {} files to {}",
        result.runs,
        result.aborts.len(),
        files.len(),
        out.display()
    );
    ExitCode::SUCCESS
}

fn analyze(trace: PathBuf, k: usize) -> ExitCode {
    let log = match std::fs::read_to_string(&trace) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_IO, format!("{}: {e}", trace.display())),
    };
    let placements = match plan_attack_from_log(&log, k) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_VALIDATION, e),
    };
    println!("router,buffer,estimate");
    for p in &placements {
        println!("{},{},{:.6}", p.router, p.buffer, p.estimate);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Simulate {
            config,
            seed,
            log,
            out,
            validate_only,
        } => simulate(config, seed, log, out, validate_only),
        Command::Sweep { plan, out } => sweep(plan, out),
        Command::Analyze { trace, plan_attack } => analyze(trace, plan_attack),
    }
}
