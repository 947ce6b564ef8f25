use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use uav_deploy::error::Error;
use uav_deploy::runner::run_experiment;
use uav_deploy::scenario::{Experiment, Scenario};

#[derive(Parser)]
#[command(name = "uav-deploy", version, about = "Power-optimal UAV base station deployment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a lloyd-a or lloyd-b scenario.
    Optimize(RunArgs),
    /// Tabulate optimal common heights and powers.
    Analytic(RunArgs),
    /// Single-cell brute-force height search.
    BruteForce(RunArgs),
    /// Run a kss or msbd scenario.
    Baseline(RunArgs),
    /// Sweep methods over fleet sizes.
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Grid resolution per axis (overrides `grid`).
    #[arg(long)]
    grid: Option<usize>,
}

fn accepts(cmd: &Command, e: Experiment) -> bool {
    match cmd {
        Command::Optimize(_) => matches!(e, Experiment::LloydA | Experiment::LloydB),
        Command::Analytic(_) => e == Experiment::Analytic,
        Command::BruteForce(_) => e == Experiment::BruteForce,
        Command::Baseline(_) => matches!(e, Experiment::Kss | Experiment::Msbd),
        Command::Sweep(_) => e == Experiment::Sweep,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let args = match &cli.command {
        Command::Optimize(a) | Command::Analytic(a) | Command::BruteForce(a) | Command::Baseline(a) | Command::Sweep(a) => a,
    };
    let mut scenario = Scenario::read(&args.scenario)?;
    if !accepts(&cli.command, scenario.experiment) {
        return Err(Error::InvalidField {
            field: "experiment".into(),
            reason: format!("`{}` does not belong to this subcommand", scenario.experiment.name()),
        });
    }
    if let Some(out) = &args.out {
        scenario.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(grid) = args.grid {
        if grid == 0 {
            return Err(Error::InvalidField {
                field: "grid".into(),
                reason: "must be at least 1".into(),
            });
        }
        scenario.grid = grid;
    }
    let outcome = run_experiment(&scenario)?;
    for f in &outcome.files {
        println!("{}", outcome.out_dir.join(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                e if e.is_validation() => 2,
                Error::Io { .. } => 1,
                _ => 3,
            })
        }
    }
}
