use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nls_control::config::RunConfig;
use nls_control::scenario::{Scenario, Subcommand as Cmd};

#[derive(Parser)]
#[command(name = "nls-control", version, about = "Bilinear control toolkit for periodic NLS equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, created if missing
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Override mc.base_seed before hashing
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Override mc.paths before hashing
    #[arg(long, value_name = "N")]
    paths: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the state equation and dump the trajectory
    Forward(Common),
    /// Run the configured optimizer and report its iterates
    Optimize(Common),
    /// Compare adjoint partial derivatives against central differences
    Gradcheck(Common),
    /// Path regularity diagnostics on one forward trajectory
    Diagnose(Common),
    /// Joint control-and-noise perturbation sweep
    Stability(Common),
}

impl Command {
    fn split(&self) -> (Cmd, &Common) {
        match self {
            Command::Forward(c) => (Cmd::Forward, c),
            Command::Optimize(c) => (Cmd::Optimize, c),
            Command::Gradcheck(c) => (Cmd::Gradcheck, c),
            Command::Diagnose(c) => (Cmd::Diagnose, c),
            Command::Stability(c) => (Cmd::Stability, c),
        }
    }
}

fn run(cmd: Cmd, common: &Common) -> nls_control::Result<()> {
    let mut config = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.mc.base_seed = seed;
    }
    if let Some(paths) = common.paths {
        config.mc.paths = paths;
    }
    let scenario = Scenario::from_config(config)?;
    println!("config {}", scenario.hash());
    for path in scenario.run(cmd, &common.out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = cli.command.split();
    match run(cmd, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
