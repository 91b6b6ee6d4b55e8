use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

mod args;
mod commands;

use args::Cli;
use commands::{emit, run, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = err.print();
                return ExitCode::SUCCESS;
            }
            let _ = err.print();
            let message = err.render().to_string();
            let first = message
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            let doc = CliError::Usage(first.to_string()).document();
            println!(
                "{}",
                serde_json::to_string_pretty(&doc).expect("error serializes")
            );
            return ExitCode::from(2);
        }
    };

    let (body, status) = match run(&cli) {
        Ok(outcome) => (outcome.body, outcome.status),
        Err(err) => {
            eprintln!("error[{}]: {err}", err.code());
            let mut body = serde_json::to_string_pretty(&err.document()).expect("error serializes");
            body.push('\n');
            (body, err.exit_status())
        }
    };
    if let Err(err) = emit(&cli, &body) {
        eprintln!("error[{}]: {err}", err.code());
        return ExitCode::from(err.exit_status());
    }
    ExitCode::from(status)
}
