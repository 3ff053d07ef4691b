//! Command-line harness: configuration, presets, subcommands and CSV output.

pub mod commands;
pub mod config;
pub mod output;

use ftl_core::FtlError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const RUNTIME: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const COLLISION: i32 = 3;
    pub const PROPERTY: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] FtlError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("property check failed: {0}")]
    Property(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if e.is_collision() => exit::COLLISION,
            CliError::Model(e) if e.is_config() => exit::CONFIG,
            CliError::Model(e) if matches!(e.root(), FtlError::Unsupported(_)) => exit::CONFIG,
            CliError::Model(_) | CliError::Io(_) | CliError::Csv(_) => exit::RUNTIME,
            CliError::Property(_) => exit::PROPERTY,
        }
    }
}
