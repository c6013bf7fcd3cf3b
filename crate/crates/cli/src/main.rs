use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use consensus_cli::commands::{self, Outcome};
use consensus_cli::scenario::Scenario;
use consensus_cli::{CliError, CliResult};

/// Consensus dynamics on weighted digraphs: stationary distributions,
/// delayed simulations and stability analysis.
///
/// Exit codes: 0 success or convergence, 1 malformed input, 2 zero is not a
/// simple Laplacian eigenvalue, 3 no consensus / divergence, 4 numerical
/// failure, 5 verification failure.
#[derive(Debug, Parser)]
#[command(name = "consensus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stationary distribution from the adjugate, null-vector and power-iteration methods
    Stationary(Common),
    /// Simulate the scenario and compare the detected consensus value with the prediction
    Simulate(Common),
    /// Characteristic-equation analysis and stability verdict (JSON report)
    Stability(Common),
    /// Run invariant checks on a scenario, or a built-in randomized battery
    Verify(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario JSON file
    #[arg(long)]
    scenario: Option<PathBuf>,

    /// Directory for CSV and JSON outputs (created if missing)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for the built-in verification battery
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Print the JSON report instead of the text summary
    #[arg(long)]
    json: bool,
}

fn load(common: &Common) -> CliResult<Scenario> {
    let path = common
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::parse("--scenario <path> is required for this command"))?;
    Scenario::load(path)
}

fn write_outputs(dir: &Path, outcome: &Outcome) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in &outcome.files {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<(Outcome, &Common)> {
    let outcome = match &cli.command {
        Command::Stationary(c) => (commands::stationary_cmd(&load(c)?)?, c),
        Command::Simulate(c) => (commands::simulate_cmd(&load(c)?)?, c),
        Command::Stability(c) => (commands::stability_cmd(&load(c)?)?, c),
        Command::Verify(c) => {
            let scenario = match &c.scenario {
                Some(_) => Some(load(c)?),
                None => None,
            };
            (commands::verify_cmd(scenario.as_ref(), c.seed)?, c)
        }
    };
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((outcome, common)) => {
            if common.json {
                println!("{}", serde_json::to_string_pretty(&outcome.report).unwrap_or_default());
            } else {
                print!("{}", outcome.summary);
            }
            if let Some(dir) = &common.out {
                if let Err(e) = write_outputs(dir, &outcome) {
                    eprintln!("error: {e}");
                    return ExitCode::from(e.exit as u8);
                }
            }
            ExitCode::from(outcome.exit as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit as u8)
        }
    }
}
