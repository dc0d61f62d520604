use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fermikit::cli::{configure_threads, run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(name = "fermikit", version, about = "Trapped two-component Fermi gas: density profiles, stability and pairing")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Ideal, self-consistent and first-order density profiles.
    Density(RunArgs),
    /// Mixture stability scan over temperature, optionally at trap radii.
    Stability(RunArgs),
    /// Pairing gap scan and transition temperatures.
    Bcs(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key = value configuration file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set a12=0.2`. Repeatable; applied in order.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn execute(command: Command, args: &RunArgs) -> Result<(), CliError> {
    configure_threads()?;
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(command, path)?,
        None => RunConfig::defaults(command),
    };
    for assignment in &args.set {
        cfg.apply_override(assignment)?;
    }
    run(&cfg, &args.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Sub::Density(a) => (Command::Density, a),
        Sub::Stability(a) => (Command::Stability, a),
        Sub::Bcs(a) => (Command::Bcs, a),
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fermikit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
