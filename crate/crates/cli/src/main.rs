//! `grholo`: JSON-configured experiments on complex Grassmannians.

mod commands;
mod config;
mod error;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{Context, Outcome};
use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "grholo", version, about = "Experiments on complex Grassmannians")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment config (version 1).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output prefix; writes <prefix>.json and, where applicable, <prefix>.csv.
    #[arg(long, global = true)]
    out: Option<String>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides grid.steps.
    #[arg(long, global = true)]
    steps: Option<usize>,

    /// Tolerance override `key=value` for structural, ode or comparison.
    #[arg(long = "tol", global = true, value_name = "KEY=VALUE", value_parser = parse_tol)]
    tol: Vec<(String, f64)>,

    /// Record wall time in reports; off by default so reports are reproducible.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Seeded chart round trips and equivariance checks.
    Chart,
    /// Projector flow, Schrödinger lift and horizontal lift of a schedule.
    Flow,
    /// Berry maps around a closed loop.
    Berry,
    /// Holonomy of the projector loop traced by a schedule.
    Holonomy,
    /// Parallelogram loops realizing a prescribed curvature element.
    Synthesize,
    /// Invariant suite of every module.
    Selftest,
    /// Sweep of the total time of a slowly rotated gapped Hamiltonian.
    Adiabatic,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn build_context(cli: &Cli) -> Result<Context, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(steps) = cli.steps {
        cfg.grid.steps = steps;
    }
    for (k, v) in &cli.tol {
        cfg.tolerances.set(k, *v)?;
    }
    if let Some(out) = &cli.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate()?;
    let tol = cfg.tolerances.resolve()?;
    Ok(Context {
        cfg,
        tol,
        timing: cli.timing,
    })
}

fn emit(outcome: &Outcome, prefix: Option<&str>) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    for text in [&outcome.text, &outcome.json].into_iter().flatten() {
        stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Usage(format!("stdout: {e}")))?;
    }
    if let Some(prefix) = prefix {
        if let Some(json) = &outcome.json {
            report::write_output(prefix, "json", json)?;
        }
        if let Some(text) = &outcome.text {
            report::write_output(prefix, "txt", text)?;
        }
        if let Some(csv) = &outcome.csv {
            report::write_output(prefix, "csv", csv)?;
        }
        for (suffix, contents) in &outcome.extra_files {
            let (stem, ext) = suffix.rsplit_once('.').unwrap_or((suffix, "txt"));
            report::write_output(&format!("{prefix}{stem}"), ext, contents)?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let ctx = build_context(cli)?;
    let outcome = match cli.command {
        Command::Chart => commands::chart(&ctx)?,
        Command::Flow => commands::flow(&ctx)?,
        Command::Berry => commands::berry(&ctx)?,
        Command::Holonomy => commands::holonomy(&ctx)?,
        Command::Synthesize => commands::synthesize(&ctx)?,
        Command::Selftest => commands::selftest(&ctx)?,
        Command::Adiabatic => commands::adiabatic(&ctx)?,
    };
    emit(&outcome, ctx.cfg.output.as_deref())?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("grholo: {e}");
            e.exit_code()
        }
    }
}
