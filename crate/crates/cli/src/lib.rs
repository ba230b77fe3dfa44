//! Batch harness around `fcs-core`: configuration, subcommand dispatch, CSV output and run
//! manifests.

pub mod checks;
pub mod commands;
pub mod config;
pub mod output;

use std::fs;
use std::time::Instant;

use fcs_core::FcsError;
use thiserror::Error;

pub use config::{parse_config, parse_config_text, Command, ConfigError, RunConfig};
pub use output::RunManifest;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),

    #[error("{op}: {source}")]
    Numeric {
        op: &'static str,
        #[source]
        source: FcsError,
    },

    #[error("writing '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric { .. } | RunError::Io { .. } => 3,
        }
    }
}

fn write(path: &std::path::Path, contents: &str) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| RunError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Runs the configured subcommand, writes its CSV files and `manifest.json`.
pub fn run(cfg: &RunConfig) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    let artifacts = match cfg.command {
        Command::Spectrum => commands::spectrum(cfg)?,
        Command::FourierVerify => commands::fourier_verify(cfg)?,
        Command::Simulate => commands::simulate_cmd(cfg)?,
        Command::Approximate => commands::approximate(cfg)?,
        Command::VerifyAll => commands::verify_all(cfg)?,
    };
    let mut outputs = Vec::new();
    for (name, contents) in &artifacts.files {
        write(&cfg.out.join(name), contents)?;
        outputs.push(name.clone());
    }
    let mut manifest = RunManifest::new(cfg.command.name(), cfg.echo.clone(), &artifacts.checks, outputs);
    manifest.wall_clock_ms = start.elapsed().as_millis() as u64;
    write(&cfg.out.join("manifest.json"), &manifest.to_json())?;
    Ok(manifest)
}
