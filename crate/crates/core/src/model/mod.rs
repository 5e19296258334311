//! Programs, µops, functional units and core configurations.
//!
//! Everything here is a plain value: build it, validate it, hand it to
//! [`crate::sim::run`].

mod config;
mod fu;
mod program;

pub use config::{CoreConfig, PortSpec, SchedulerPolicy};
pub use fu::{preset_fu, FuPreset, FunctionalUnitSpec, StageSpec};
pub use program::{build_program, BranchInfo, BranchSpec, MicroOp, OpClass, OpSpec, Program, ProgramBuilder};

use thiserror::Error;

/// Program-order sequence number.
pub type Seq = u32;

/// Simulated clock cycle.
pub type Cycle = u64;

/// Version tag written as `"v"` in every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown preset `{name}` (valid: {valid})")]
    UnknownPreset { name: String, valid: String },
    #[error("µop {seq} depends on {dep}, which is not older")]
    ForwardDependence { seq: Seq, dep: Seq },
    #[error("expected seq {expected}, found {found}")]
    SeqMismatch { expected: Seq, found: Seq },
    #[error("µop {seq}: branch_info must be present exactly on Branch µops")]
    BranchInfoMismatch { seq: Seq },
    #[error("µop {seq} ({op}) needs a functional unit kind")]
    MissingFuKind { seq: Seq, op: OpClass },
    #[error("µop {seq} ({op}) does not use a functional unit but names `{kind}`")]
    UnexpectedFuKind { seq: Seq, op: OpClass, kind: String },
    #[error("second {op} at seq {seq}")]
    DuplicateTimer { op: OpClass, seq: Seq },
    #[error("TimerStop (seq {stop}) must follow TimerStart (seq {start})")]
    TimerOrder { start: Seq, stop: Seq },
    #[error("functional unit `{kind}`: {reason}")]
    InvalidUnit { kind: String, reason: String },
    #[error("invalid core config: {0}")]
    InvalidConfig(String),
    #[error("unsupported schema version {0} (expected 1)")]
    SchemaVersion(u32),
    #[error("malformed JSON at `{path}`: {message}")]
    Json { path: String, message: String },
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ModelError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| ModelError::Json { path: e.path().to_string(), message: e.inner().to_string() })
}
