//! `edmpc` command-line tool.

mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;
use edmpc::config::Config;

use args::{Cli, Command};
use error::{CliError, CliResult};

fn load_config(cli: &Cli) -> CliResult<Config> {
    let mut config = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    for item in &cli.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got '{item}'")))?;
        config.set(key.trim(), value.trim())?;
    }
    Ok(config)
}

fn main_inner(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Replay(a) => commands::replay(a).map(|_| ()),
        command => {
            let config = load_config(&cli)?;
            let manifest = commands::execute(command, config)?;
            eprintln!(
                "{}: wrote {} files in {:.2}s",
                command.name(),
                manifest.outputs.len() + 1,
                manifest.duration_secs
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
