//! Instance ingestion, command dispatch and run reports for `cohesive`.

pub mod commands;
pub mod instance;
pub mod report;

pub use commands::{cmd_check, cmd_cohomology, cmd_regularize, cmd_solve, cmd_transfer, Command, Outcome, Status};
pub use instance::{read_instance, Instance, InstanceFile};
pub use report::{write_report, Profile};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("validation failed at {path}: {source}")]
    Validation { path: String, source: cohesive_core::Error },
    #[error("base algebra fails {axiom}: worst defect {worst:.3e}")]
    Axiom { axiom: String, worst: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;
