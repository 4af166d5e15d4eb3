//! Subcommands of the `tempowic` tool: validate, calibrate, predict,
//! evaluate, train-head and route.

pub mod commands;
pub mod config;

use thiserror::Error;

pub use commands::{cmd_calibrate, cmd_evaluate, cmd_predict, cmd_route, cmd_train_head, cmd_validate};
pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or input files; exit code 2.
    #[error("{0}")]
    Input(String),
    /// Anything else, such as failing to write outputs; exit code 1.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<tempowic_core::Error> for CliError {
    fn from(e: tempowic_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
