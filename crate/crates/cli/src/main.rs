use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thinpore_cli::{exit_code, run, CliError, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "thinpore", version, about = "Bingham flow in thin porous media")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent solves.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// One solve on the thin domain.
    Single,
    /// Cell problems at explicit forces.
    Cell,
    /// Permeability table.
    Sweep,
    /// Nonlinear Darcy problem.
    Darcy,
    /// Distance of the rescaled solutions to the local limit.
    EpsilonStudy,
    /// Scaled norms over a family of media.
    VerifyApriori,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Single => Command::Single,
            Cmd::Cell => Command::Cell,
            Cmd::Sweep => Command::Sweep,
            Cmd::Darcy => Command::Darcy,
            Cmd::EpsilonStudy => Command::EpsilonStudy,
            Cmd::VerifyApriori => Command::VerifyApriori,
        }
    }
}

fn main_inner(args: Args) -> Result<i32, CliError> {
    let path = args
        .config
        .ok_or_else(|| CliError::validation("--config", "a config file is required"))?;
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::validation("--threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation("--threads", &e.to_string()))?;
    }
    let out = args
        .out
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let command = Command::from(args.command);
    log::info!("running {} with config {}", command.name(), path.display());
    let report = run(command, &cfg)?;
    report.write(&out)?;
    print!("{}", report.summary());
    Ok(exit_code(&report))
}

fn main() -> ExitCode {
    env_logger::init();
    match main_inner(Args::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
