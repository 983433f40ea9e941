use std::process::ExitCode;

use anyhow::Context;
use cfm::cli::{run, Cli};
use cfm::CfmError;
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let name = format!("{:?}", cli.command)
        .split_whitespace()
        .next()
        .unwrap_or_default()
        .to_lowercase();
    match run(cli).with_context(|| format!("{name} failed")) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let cause = err.downcast_ref::<CfmError>();
            let kind = cause.map_or("internal", CfmError::kind);
            eprintln!("error[{kind}]: {err:#}");
            ExitCode::from(cause.map_or(1, CfmError::exit_code) as u8)
        }
    }
}
