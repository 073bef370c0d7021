use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcwave_cli::plan::Overrides;
use qcwave_cli::{run_file, Mode, EXIT_OK};

#[derive(Parser)]
#[command(name = "qcwave", version, about = "Run quantum-to-classical wave scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run(RunArgs),
    /// Run the config's scenario once per lambda and tabulate the results.
    Sweep(RunArgs),
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Skip the built-in invariant checks.
    #[arg(long)]
    no_checks: bool,
    /// Write this many evenly spaced field snapshots.
    #[arg(long, value_name = "N")]
    snapshots: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            no_checks: self.no_checks,
            snapshots: self.snapshots,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match &cli.command {
        Command::Run(a) => run_file(&a.config, &a.overrides(), Mode::Run),
        Command::Sweep(a) => run_file(&a.config, &a.overrides(), Mode::Sweep),
        Command::Validate { config } => run_file(config, &Overrides::default(), Mode::Validate),
    };
    if report.code == EXIT_OK {
        println!("{}", report.message);
    } else {
        eprintln!("error: {}", report.message);
    }
    ExitCode::from(report.code as u8)
}
