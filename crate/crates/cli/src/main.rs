mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use commands::{Cli, CliError};

fn report(code: &str, message: &str) {
    let body = serde_json::json!({ "error": { "code": code, "message": message } });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report("usage", e.to_string().trim_end());
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // Downstream closed early, as with `| head`.
        Err(CliError { code, .. }) if code == "broken_pipe" => ExitCode::SUCCESS,
        Err(CliError { code, message }) => {
            report(&code, &message);
            ExitCode::FAILURE
        }
    }
}
