use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use twopatch_cli::{commands, RunConfig, EXIT_FAILURE};

#[derive(Parser)]
#[command(name = "twopatch", version, about = "Two-patch reaction-diffusion steady states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; the logistic reference instance when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Tolerance override, e.g. `--tol rtol=1e-11` (repeatable).
    #[arg(long = "tol", value_name = "NAME=VALUE", global = true)]
    tol: Vec<String>,
    /// Primary grid size of the command.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Shooting solve with audits and certification.
    Solve,
    /// Sufficient-condition audits.
    Audit,
    /// Time-map monotonicity scans.
    Timemap,
    /// Solve over the `[sweep]` parameter grid.
    Sweep,
    /// Finite-difference cross-check.
    Validate,
    /// Phase-plane orbit families and the matched arcs.
    Phase,
}

fn run(cli: Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::reference(),
    };
    for t in &cli.tol {
        cfg.apply_tolerance(t)?;
    }
    if let Some(n) = cli.grid {
        let g = &mut cfg.grids;
        match cli.command {
            Command::Solve | Command::Sweep => g.scan = n,
            Command::Audit => g.audit = n,
            Command::Timemap => g.timemap = n,
            Command::Validate => g.fd = n,
            Command::Phase => g.phase_points = n,
        }
    }
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    let f = match cli.command {
        Command::Solve => commands::solve,
        Command::Audit => commands::audit,
        Command::Timemap => commands::timemap,
        Command::Sweep => commands::sweep,
        Command::Validate => commands::validate,
        Command::Phase => commands::phase,
    };
    let outcome = f(&cfg, &cli.out)?;
    println!("{}", outcome.summary);
    for file in &outcome.files {
        log::info!("wrote {}", file.display());
    }
    Ok(outcome.code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE as u8)
        }
    }
}
