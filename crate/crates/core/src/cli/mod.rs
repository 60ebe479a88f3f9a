//! Command-line front end. Data goes to files (or stdout for `solve`);
//! diagnostics go to stderr.

pub mod commands;
pub mod config;
pub mod csv;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::dynamics::Mode;
pub use commands::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "effaction",
    version,
    about = "Quantum- and thermally-corrected effective action in one dimension"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Classical,
    Effective,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Classical => Mode::Classical,
            ModeArg::Effective => Mode::Effective,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate Ω, a², W and m_eff on a uniform grid.
    Tabulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a classical or effective trajectory.
    Trajectory {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
        #[arg(long, allow_negative_numbers = true)]
        v0: f64,
        #[arg(long)]
        tmax: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the oracle suite and print a pass/fail table.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Also run the fluctuation-determinant probe of the kinetic coefficient.
        #[arg(long)]
        z_probe: bool,
    },
    /// Solve the trial frequency at one point; prints one CSV row.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        at: f64,
    },
}

pub fn execute(cli: Cli, out: &mut dyn Write, diag: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Tabulate {
            config,
            grid,
            out: path,
        } => {
            let (cfg, p) = commands::load(&config)?;
            commands::run_tabulate(&cfg, &p, grid, path.as_deref(), diag).map(|_| ())
        }
        Command::Trajectory {
            config,
            mode,
            x0,
            v0,
            tmax,
            out: path,
        } => {
            let (cfg, p) = commands::load(&config)?;
            commands::run_trajectory(&cfg, &p, mode.into(), x0, v0, tmax, path.as_deref(), diag)
                .map(|_| ())
        }
        Command::Validate { config, z_probe } => {
            let (cfg, p) = commands::load(&config)?;
            commands::run_validate(&cfg, &p, z_probe, out).map(|_| ())
        }
        Command::Solve { config, at } => {
            let (cfg, p) = commands::load(&config)?;
            commands::run_solve(&cfg, &p, at, out, diag)
        }
    }
}

/// Parse arguments, run, and map the outcome to an exit status:
/// 0 success, 1 computational failure, 2 usage or configuration error.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    match execute(cli, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
