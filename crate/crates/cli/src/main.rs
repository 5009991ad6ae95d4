use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use piezo_cli::commands::{cmd_simulate, cmd_sweep};
use piezo_cli::verify::cmd_verify;
use piezo_cli::{resolve, CliError, Overrides};

/// Boundary control of a damped piezoelectric beam.
#[derive(Debug, Parser)]
#[command(name = "piezo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config file (keys as in the scenario).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// paper-open-loop, fig2a..fig2c, fig3a..fig3c, fig4-case1, fig4-case2.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Override one key, e.g. `--set params.b=3` or `--set controller.Kp=1.35`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured scenario(s); writes timeseries CSV and metrics.json.
    Simulate,
    /// Run gain sweeps; one subdirectory per cell plus sweep_summary.csv.
    Sweep,
    /// Run the invariant checks; writes verify.json.
    Verify,
    /// Print the resolved configuration as JSON.
    Config,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve(&Overrides {
        config: cli.config,
        out: cli.out,
        preset: cli.preset,
        set: cli.set,
    })?;
    match cli.command {
        Command::Simulate => cmd_simulate(&cfg),
        Command::Sweep => cmd_sweep(&cfg),
        Command::Verify => cmd_verify(&cfg),
        Command::Config => {
            println!(
                "{}",
                serde_json::to_string_pretty(&cfg).expect("config serializes")
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
