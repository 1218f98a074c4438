//! `fronthaul` command-line front-end.

mod commands;
mod config;
mod error;
mod output;

use clap::{Args, Parser, Subcommand};
use error::CliError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "fronthaul", version = output::VERSION, about = "Interference and outage experiments for UAV mmWave fronthaul")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample deployments and write their topologies.
    Deploy(Common),
    /// Dump the UAV array pattern and its Gaussian envelope.
    PatternDump(Common),
    /// Mean interference versus target SBS roll.
    PhiSweep(Common),
    /// Mean intra-cell interference versus spatial angle.
    ThetaDSweep(Common),
    /// Monte-Carlo average outage over the sweep.
    OutageSim(Common),
    /// Analytic outage upper bound over the sweep.
    OutageBound(Common),
    /// Joined simulation and bound table with a dominance verdict.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Built-in preset to start from.
    #[arg(short, long)]
    preset: Option<String>,
    /// Override a key, e.g. `--set antenna.n_u=25`. Repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Validate and print the resolved configuration without computing.
    #[arg(long)]
    dry_run: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::Deploy(c) => ("deploy", c),
        Command::PatternDump(c) => ("pattern-dump", c),
        Command::PhiSweep(c) => ("phi-sweep", c),
        Command::ThetaDSweep(c) => ("theta-d-sweep", c),
        Command::OutageSim(c) => ("outage-sim", c),
        Command::OutageBound(c) => ("outage-bound", c),
        Command::Compare(c) => ("compare", c),
    };
    let mut cfg = config::resolve(
        common.preset.as_deref(),
        common.config.as_deref(),
        &common.overrides,
    )?;
    if let Some(dir) = &common.out {
        cfg.output.dir = dir.display().to_string();
    }
    cfg.sim_config().validate()?;
    if common.dry_run {
        println!("# resolved configuration (digest {})", cfg.digest());
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let mut out = output::Emitter::new(&cfg, name)?;
    let result = match cli.command {
        Command::Deploy(_) => commands::deploy(&cfg, &mut out),
        Command::PatternDump(_) => commands::pattern_dump(&cfg, &mut out),
        Command::PhiSweep(_) => commands::phi_sweep(&cfg, &mut out),
        Command::ThetaDSweep(_) => commands::theta_d_sweep(&cfg, &mut out),
        Command::OutageSim(_) => commands::outage_sim(&cfg, &mut out),
        Command::OutageBound(_) => commands::outage_bound(&cfg, &mut out),
        Command::Compare(_) => commands::compare(&cfg, &mut out),
    };
    for p in out.written() {
        println!("wrote {}", p.display());
    }
    result
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
