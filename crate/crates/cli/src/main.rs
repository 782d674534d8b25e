//! `wingforge`: geometry export, dataset preparation, surrogate prediction,
//! metrics, plots, optimization and the HTTP service from one binary.
//!
//! Exit status is 0 on success, 1 for input errors (including usage errors)
//! and 2 for internal failures. With `--json` every command prints one JSON
//! document on stdout whose layout is published by `wingforge schema`.

mod args;
mod commands;
mod config;
mod error;
mod io;
mod svg;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use crate::args::Cli;
use crate::config::CliConfig;
use crate::error::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("WINGFORGE_LOG").unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();

    let name = cli.command.name();
    let outcome =
        CliConfig::load(cli.config.as_deref()).and_then(|config| commands::run(&cli.command, &config, cli.json));
    match outcome {
        Ok(out) => {
            let mut doc = if cli.json {
                serde_json::to_string_pretty(&out.json).expect("output serializes")
            } else {
                out.text
            };
            if !doc.is_empty() && !doc.ends_with('\n') {
                doc.push('\n');
            }
            // a closed pipe (`| head`) is not a failure of the command
            let _ = std::io::stdout().lock().write_all(doc.as_bytes());
            ExitCode::SUCCESS
        }
        Err(err) => report(name, cli.json, &err),
    }
}

fn report(command: &str, as_json: bool, err: &CliError) -> ExitCode {
    if as_json {
        let doc = json!({"command": command, "error": err.label(), "detail": err.to_string()});
        println!("{}", serde_json::to_string_pretty(&doc).expect("error serializes"));
    }
    eprintln!("error: {err}");
    ExitCode::from(err.code() as u8)
}
