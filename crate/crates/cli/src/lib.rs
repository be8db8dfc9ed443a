//! Experiment harness behind the `reset-ldp` binary.

pub mod config;
pub mod output;
pub mod plot;
pub mod run;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use serde_json::json;
use thiserror::Error;

pub use config::{Cli, Experiment, ExperimentConfig, SEED_ENV};
pub use run::{execute, write_artifacts, Artifacts, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Runtime(_) => "runtime",
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind(), "message": self.to_string() } }).to_string()
    }
}

/// Parses and resolves a command line.
pub fn parse_config<I, T>(args: I, env_seed: Option<&str>) -> Result<ExperimentConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
    ExperimentConfig::resolve(cli.command, env_seed)
}

/// Full CLI behaviour; returns the process exit code.
pub fn run_cli<I, T>(args: I, env_seed: Option<&str>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let err = CliError::Config(e.to_string().trim_end().to_string());
            let _ = writeln!(stderr, "{}", err.to_json());
            return err.exit_code();
        }
    };
    let result = ExperimentConfig::resolve(cli.command, env_seed).and_then(|cfg| {
        let art = execute(&cfg)?.render()?;
        write_artifacts(&cfg, &art, stdout)
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            e.exit_code()
        }
    }
}
