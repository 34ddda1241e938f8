use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use robinv_core::cli::{
    cmd_compare, cmd_simulate, cmd_solve, cmd_sweep, parse_values, Overrides, RunReport, ScenarioConfig,
};
use robinv_core::Result;

/// Robust investment-consumption solver.
///
/// Exit status: 0 success, 1 solver or I/O failure, 2 invalid input,
/// 3 comparative-statics assertion failed, 4 Monte Carlo check failed.
#[derive(Debug, Parser)]
#[command(name = "robinv", version)]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true, default_value = "configs/reference_gamma4.toml")]
    config: PathBuf,

    /// Output directory; overrides the scenario's [output] dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Number of time steps; overrides the solver (or simulation) grid.
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Value curves, consumption, loss and exposures for the base scenario.
    Solve,
    /// Solve every constraint case and check the orderings between them.
    Compare,
    /// Vary one ambiguity weight and check monotonicity.
    Sweep {
        /// Zero-based factor index of the weight to vary.
        #[arg(long)]
        index: Option<usize>,
        /// Comma-separated weights, e.g. 0,1,2,3,4,5.
        #[arg(long)]
        values: Option<String>,
    },
    /// Monte Carlo check of the value function.
    Simulate,
}

fn run(cli: &Cli) -> Result<RunReport> {
    let config = ScenarioConfig::load(&cli.config)?;
    let ov = Overrides {
        out: cli.out.clone(),
        grid: cli.grid,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Solve => cmd_solve(&config, &ov),
        Command::Compare => cmd_compare(&config, &ov),
        Command::Sweep { index, values } => {
            let values = values.as_deref().map(parse_values).transpose()?;
            cmd_sweep(&config, &ov, *index, values)
        }
        Command::Simulate => cmd_simulate(&config, &ov),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            for line in &report.outcomes {
                println!("{line}");
            }
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            println!("elapsed {:.3} s", report.elapsed.as_secs_f64());
            if let Some(err) = &report.failure {
                eprintln!("error: {err}");
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
