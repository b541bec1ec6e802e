mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use prf_core::PrfError;

use commands::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = matches!(
                e.downcast_ref::<PrfError>(),
                Some(PrfError::InvalidParameter(_) | PrfError::Parse { .. } | PrfError::Alignment(_))
            );
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
