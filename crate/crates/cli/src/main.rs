use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use shiftcover::{commands, CliError, Cli};

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(e.to_string())),
    };
    match commands::run(cli, &raw) {
        Ok(outcome) => {
            if let Some((_, summary)) = outcome.artifacts.first() {
                let _ = std::io::stdout().write_all(summary);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    let _ = std::io::stderr().write_all(&e.to_json());
    ExitCode::from(e.exit_code() as u8)
}
