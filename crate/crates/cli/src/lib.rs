//! `envpair`: one binary for every pipeline stage.
//!
//! Each subcommand prints a JSON summary as its last stdout line and logs
//! JSON events to stderr. Exit codes: 0 success, 1 validation, 2 I/O,
//! 3 remote-service failure; failures print
//! `{"status":"error","kind":..,"code":..,"message":..}` to stderr.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "envpair", version, about = "Sensor-enriched temporal image pair pipeline")]
pub struct Cli {
    /// TOML run configuration; `${VAR}` values are read from the environment.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "info")]
    pub log_level: tracing::Level,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Metadata to temporal pairs and a pairing report.
    Pair(commands::PairArgs),
    /// Pairs to sensor-enriched samples, through the on-disk cache.
    Enrich(commands::EnrichArgs),
    /// Enriched samples to the annotation store, split across two backends.
    Annotate(commands::AnnotateArgs),
    /// Apply the score threshold to human scorecards.
    Curate(commands::CurateArgs),
    /// Annotations to conversation JSONL.
    Build(commands::BuildArgs),
    /// Score predictions against references.
    Eval(commands::EvalArgs),
    /// Run the chat session service.
    Serve(commands::ServeArgs),
}

async fn dispatch(cli: Cli) -> CliResult<Value> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Pair(a) => commands::pair(a, &cfg),
        Command::Enrich(a) => commands::enrich(a, &cfg).await,
        Command::Annotate(a) => commands::annotate(a, &cfg).await,
        Command::Curate(a) => commands::curate(a, &cfg),
        Command::Build(a) => commands::build(a, &cfg),
        Command::Eval(a) => commands::eval(a, &cfg).await,
        Command::Serve(a) => commands::serve(a, &cfg).await,
    }
}

/// Parses `argv`, runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let err = CliError::Validation(e.to_string().trim().to_string());
            eprintln!("{}", err.summary());
            return err.code();
        }
    };
    let _ = tracing_subscriber::fmt()
        .json()
        .with_writer(std::io::stderr)
        .with_max_level(cli.log_level)
        .try_init();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            let err = CliError::io("starting runtime", e);
            eprintln!("{}", err.summary());
            return err.code();
        }
    };
    match runtime.block_on(dispatch(cli)) {
        Ok(mut summary) => {
            if let Value::Object(m) = &mut summary {
                m.insert("status".into(), json!("ok"));
            }
            println!("{summary}");
            0
        }
        Err(err) => {
            tracing::error!(kind = err.kind(), error = %err, "command failed");
            eprintln!("{}", err.summary());
            err.code()
        }
    }
}
