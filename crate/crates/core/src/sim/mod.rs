//! Cycle-level out-of-order core.
//!
//! Each cycle runs five phases in a fixed order: branch resolution (and
//! squash), issue, stage advance / completion, dispatch, retire. A µop's
//! result is visible to dependents in the cycle it completes, so a dependent
//! chain on a unit of latency `L` issues every `L` cycles.
//!
//! Functional units are modelled as reservation tables. Issuing a µop books
//! every stage it will pass through; a blocking stage admits one µop for its
//! full latency, a pipelined stage admits one new µop per cycle. There is no
//! back-pressure, so a µop only issues if its whole path is free.

mod diagram;
mod engine;
mod trace;

pub use diagram::{render_diagram, LEGEND};
pub use engine::{Simulator, DEFAULT_CYCLE_LIMIT};
pub use trace::{Event, EventKind, Trace, UopRecord};

use thiserror::Error;

use crate::model::{CoreConfig, Cycle, ModelError, Program, Seq};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ModelError),
    #[error("µop {seq} uses functional unit `{kind}`, which the core does not have")]
    UnknownUnit { seq: Seq, kind: String },
    #[error("no port reaches functional unit `{kind}`")]
    UnreachableUnit { kind: String },
    #[error("simulation exceeded {0} cycles")]
    CycleLimit(Cycle),
    #[error("µop {seq} is not in flight")]
    NotInFlight { seq: Seq },
    #[error("µop {seq} is not a mispredicted branch")]
    NotMispredicted { seq: Seq },
}

/// Simulates `program` on `config` until every µop has retired or been
/// squashed.
pub fn run(program: &Program, config: &CoreConfig) -> Result<Trace, SimError> {
    Simulator::new(program, config)?.run_to_end()
}

pub fn run_with_limit(program: &Program, config: &CoreConfig, limit: Cycle) -> Result<Trace, SimError> {
    Simulator::with_limit(program, config, limit)?.run_to_end()
}

#[cfg(test)]
mod tests;
