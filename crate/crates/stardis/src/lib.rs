//! Scenario files, parallel runs, result files and the `stardis` command line.

pub mod cli;
pub mod config;
pub mod output;
pub mod runner;

use stardis_core::engine::EngineError;
use stardis_core::persuasion::PersuasionError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Persuasion(#[from] PersuasionError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("golden plans differ for seeds {0:?}")]
    Golden(Vec<u64>),
}

impl Error {
    /// 2 for anything the user can fix in the inputs, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) | Error::Persuasion(_) | Error::Engine(EngineError::Config(_)) => 2,
            _ => 1,
        }
    }
}
