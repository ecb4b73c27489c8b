//! `persuasion`: solve, verify and simulate optimal dynamic information
//! policies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;
use crate::output::OutDir;

const AFTER_HELP: &str = "\
Configuration precedence: command-line flags > --config file > built-in defaults.
Built-in defaults: κ = -0.5, σ = 2, r = 3, σ₀² = 2, β = 3 (one dimension); the
three-component example with ‖β‖ = 5 for solve-multi.

Exit codes: 0 pass, 1 verification failure, 2 invalid input.
Set PERSUASION_LOG (error, warn, info, debug, trace) for logging on stderr.";

#[derive(Debug, Parser)]
#[command(name = "persuasion", version, about, after_help = AFTER_HELP)]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Base seed of the Monte Carlo streams.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Step of the output and verification grid.
    #[arg(long = "grid-step", global = true, value_name = "DT")]
    grid_step: Option<f64>,

    /// Tolerance of the verification checks.
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,

    /// Number of Monte Carlo paths.
    #[arg(long, global = true, value_name = "N")]
    paths: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the one-dimensional problem; writes solution.json and solution.csv.
    Solve,
    /// Solve the multidimensional problem; writes solution.json and solution.csv.
    SolveMulti,
    /// Solve the two-period example and check it against a grid search.
    TwoPeriod,
    /// Check obedience, the binding equation and Bayes plausibility.
    Verify {
        /// Solution JSON or CSV with columns t, b, v. Solves from the
        /// configuration when omitted.
        input: Option<PathBuf>,
    },
    /// Monte Carlo payoffs and deviation tests.
    Simulate {
        /// Solution JSON. Solves from the configuration when omitted.
        solution: Option<PathBuf>,
    },
    /// Comparative statics over one parameter.
    Sweep,
    /// Data behind the figures.
    Figure {
        /// fig2, fig3, fig4, fig5 or all.
        #[arg(default_value = "all")]
        name: String,
    },
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply(&Overrides {
        seed: cli.seed,
        grid_step: cli.grid_step,
        tol: cli.tol,
        paths: cli.paths,
    });
    log::debug!("configuration: {cfg:?}");
    let mut out = OutDir::create(&cli.out)?;
    let passed = match cli.command {
        Command::Solve => commands::solve::run(&cfg, &mut out)?,
        Command::SolveMulti => commands::solve::run_multi(&cfg, &mut out)?,
        Command::TwoPeriod => commands::two_period::run(&cfg, &mut out)?,
        Command::Verify { input } => commands::verify::run(&cfg, input.as_deref(), &mut out)?,
        Command::Simulate { solution } => {
            commands::simulate::run(&cfg, solution.as_deref(), &mut out)?
        }
        Command::Sweep => commands::sweep::run(&cfg, &mut out)?,
        Command::Figure { name } => commands::figure::run(&cfg, &name, &mut out)?,
    };
    let mut stdout = std::io::stdout();
    for path in out.written() {
        let _ = writeln!(stdout, "{}", path.display());
    }
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PERSUASION_LOG", "warn"))
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
