use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use epwb_cli::{exit_code, run_audit, run_file, Outcome, TOL_ENV};

#[derive(Parser)]
#[command(
    name = "epwb",
    version,
    about = "Ermakov-Pinney workbench: simulate, verify and audit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON scenario file.
    Run { file: PathBuf },
    /// Evaluate every discriminating check and print the ledger.
    AuditAll {
        /// Also write the ledger to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the expression grammar.
    PrintGrammar,
}

fn finish(result: anyhow::Result<Outcome>) -> ExitCode {
    match result {
        Ok(outcome) => {
            print!("{}", outcome.report);
            for f in &outcome.failures {
                eprintln!("check failed: {f}");
            }
            ExitCode::from(exit_code(&outcome) as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    // usage errors exit with 1; 2 is reserved for failed checks
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Run { file } => {
            let tol = std::env::var(TOL_ENV).ok();
            finish(run_file(&file, tol.as_deref()))
        }
        Command::AuditAll { out } => finish(run_audit(out.as_deref())),
        Command::PrintGrammar => {
            print!("{}", epwb_core::expr::GRAMMAR);
            ExitCode::SUCCESS
        }
    }
}
