//! `kneescope` command-line front end: argument handling, JSON reports and
//! SVG plots around the `kneescope` library.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;

use crate::cli::{resolve_config, Cli, Command, OutputArgs};
use crate::commands::Outcome;
use crate::error::{CliError, EXIT_OK, EXIT_USER};

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::user("io", format!("cannot write {}: {e}", path.display())))
}

fn emit<T: Serialize>(out: &OutputArgs, outcome: Outcome<T>) -> Result<(), CliError> {
    let bytes = output::to_json_bytes(&outcome.document)
        .map_err(|e| CliError::internal(format!("cannot serialize report: {e}")))?;
    if let Some(path) = &out.svg {
        write_file(path, svg::render(&outcome.panels).as_bytes())?;
    }
    match &out.output {
        Some(path) => write_file(path, &bytes),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::internal(format!("cannot write to stdout: {e}"))),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Knee(a) => {
            let cfg = resolve_config(&a.out, |c| {
                a.capacity.apply(c);
                a.segmentation.apply(c);
            })?;
            emit(&a.out, commands::run_knee(cfg)?)
        }
        Command::Psd(a) => {
            let cfg = resolve_config(&a.out, |c| {
                a.capacity.apply(c);
                a.segmentation.apply(c);
                a.welch.apply(c);
            })?;
            emit(&a.out, commands::run_psd(cfg, a.knee_report.as_deref())?)
        }
        Command::Ica(a) => {
            let cfg = resolve_config(&a.out, |c| {
                if a.input.is_some() {
                    c.rpt_manifest = a.input.clone();
                }
                a.ica.apply(c);
            })?;
            emit(&a.out, commands::run_ica(cfg)?)
        }
        Command::Report(a) => {
            let cfg = resolve_config(&a.out, |c| {
                a.capacity.apply(c);
                a.segmentation.apply(c);
                a.welch.apply(c);
                if a.rpt_manifest.is_some() {
                    c.rpt_manifest = a.rpt_manifest.clone();
                }
                a.ica.apply(c);
            })?;
            emit(&a.out, commands::run_report(cfg)?)
        }
    }
}

/// Runs the CLI and returns the process exit code. Errors are printed to
/// stderr as a single JSON line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            let err = CliError::user("usage", e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return EXIT_USER;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code
        }
    }
}
