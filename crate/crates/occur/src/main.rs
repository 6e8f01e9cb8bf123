use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use occur::cli::{cmd_audit, cmd_run, cmd_sweep};

/// Reduced-dynamics simulator and operator-current conservation auditor
/// for open quantum systems.
#[derive(Parser)]
#[command(name = "occur", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate a scenario and write the trajectory CSV.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Audit conservation for every observable; exits 1 on violation.
    Audit {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Embed the full time series in the report.
        #[arg(long)]
        series: bool,
    },
    /// Scale the interaction strength and record conservation residuals.
    Sweep {
        scenario: PathBuf,
        /// Swept parameter; only `coupling` is supported.
        #[arg(long)]
        param: String,
        /// Comma-separated descending values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { scenario, out } => cmd_run(&scenario, &out).map(|()| 0),
        Command::Audit {
            scenario,
            out,
            series,
        } => cmd_audit(&scenario, &out, series).map(|run| if run.all_conserved() { 0 } else { 1 }),
        Command::Sweep {
            scenario,
            param,
            values,
            out,
        } => cmd_sweep(&scenario, &param, &values, &out).map(|()| 0),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("occur: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
