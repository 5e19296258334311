use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelError, Seq, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OpClass {
    FpDiv,
    FpMul,
    IntAlu,
    Load,
    Branch,
    TimerStart,
    TimerStop,
    Nop,
}

impl OpClass {
    /// Functional-unit kind consumed by default, `None` for µops that never
    /// occupy a unit.
    pub fn default_fu_kind(self) -> Option<&'static str> {
        match self {
            OpClass::FpDiv => Some("fp_div"),
            OpClass::FpMul => Some("fp_mul"),
            OpClass::IntAlu => Some("int_alu"),
            OpClass::Load => Some("load"),
            OpClass::Branch | OpClass::TimerStart | OpClass::TimerStop | OpClass::Nop => None,
        }
    }

    pub fn uses_fu(self) -> bool {
        self.default_fu_kind().is_some()
    }

    pub fn is_timer(self) -> bool {
        matches!(self, OpClass::TimerStart | OpClass::TimerStop)
    }
}

impl fmt::Display for OpClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchInfo {
    pub predicted_outcome: bool,
    pub actual_outcome: bool,
    /// µops fetched after the branch resolves mispredicted. Entry `i` carries
    /// static seq `branch.seq + 1 + i`; deps at or below the branch's seq refer
    /// to the enclosing stream.
    pub alt_path: Vec<MicroOp>,
}

impl BranchInfo {
    pub fn mispredicted(&self) -> bool {
        self.predicted_outcome != self.actual_outcome
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MicroOp {
    pub seq: Seq,
    pub op: OpClass,
    pub deps: BTreeSet<Seq>,
    pub branch_info: Option<BranchInfo>,
    pub fu_kind: Option<String>,
}

/// A validated µop stream. Construct with [`build_program`],
/// [`ProgramBuilder`] or [`Program::from_json`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program {
    ops: Vec<MicroOp>,
    label: String,
}

#[derive(Serialize)]
struct ProgramDocRef<'a> {
    v: u32,
    label: &'a str,
    ops: &'a [MicroOp],
}

#[derive(Deserialize)]
struct ProgramDoc {
    v: u32,
    label: String,
    ops: Vec<MicroOp>,
}

impl Program {
    pub fn ops(&self) -> &[MicroOp] {
        &self.ops
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Every µop in the program, alternate paths included, depth first.
    pub fn all_ops(&self) -> Vec<&MicroOp> {
        fn walk<'a>(ops: &'a [MicroOp], out: &mut Vec<&'a MicroOp>) {
            for op in ops {
                out.push(op);
                if let Some(b) = &op.branch_info {
                    walk(&b.alt_path, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.ops, &mut out);
        out
    }

    /// The same program minus every µop on a wrong path: each stream ends
    /// at its first mispredicted branch, which still re-steers into its
    /// alternate path.
    pub fn without_transients(&self) -> Program {
        fn strip(ops: &mut Vec<MicroOp>) {
            for i in 0..ops.len() {
                let Some(info) = ops[i].branch_info.as_mut() else { continue };
                strip(&mut info.alt_path);
                if info.mispredicted() {
                    ops.truncate(i + 1);
                    return;
                }
            }
        }
        let mut ops = self.ops.clone();
        strip(&mut ops);
        Program { ops, label: format!("{}-no-transients", self.label) }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn to_json(&self) -> String {
        let doc = ProgramDocRef { v: SCHEMA_VERSION, label: &self.label, ops: &self.ops };
        serde_json::to_string_pretty(&doc).expect("program serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: ProgramDoc = super::parse_json(text)?;
        if doc.v != SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion(doc.v));
        }
        Program::from_ops(doc.label, doc.ops)
    }

    /// Validates an already-numbered op list.
    pub fn from_ops(label: impl Into<String>, ops: Vec<MicroOp>) -> Result<Self, ModelError> {
        let mut timers = TimerSeen::default();
        check_stream(&ops, 0, &mut timers)?;
        timers.check_order()?;
        Ok(Program { ops, label: label.into() })
    }
}

#[derive(Default)]
struct TimerSeen {
    start: Option<Seq>,
    stop: Option<Seq>,
}

impl TimerSeen {
    fn note(&mut self, op: &MicroOp) -> Result<(), ModelError> {
        let slot = match op.op {
            OpClass::TimerStart => &mut self.start,
            OpClass::TimerStop => &mut self.stop,
            _ => return Ok(()),
        };
        if slot.is_some() {
            return Err(ModelError::DuplicateTimer { op: op.op, seq: op.seq });
        }
        *slot = Some(op.seq);
        Ok(())
    }

    fn check_order(&self) -> Result<(), ModelError> {
        match (self.start, self.stop) {
            (Some(start), Some(stop)) if stop <= start => Err(ModelError::TimerOrder { start, stop }),
            (None, Some(stop)) => Err(ModelError::TimerOrder { start: Seq::MAX, stop }),
            _ => Ok(()),
        }
    }
}

fn check_stream(ops: &[MicroOp], base: Seq, timers: &mut TimerSeen) -> Result<(), ModelError> {
    for (i, op) in ops.iter().enumerate() {
        let expected = base + i as Seq;
        if op.seq != expected {
            return Err(ModelError::SeqMismatch { expected, found: op.seq });
        }
        if let Some(&dep) = op.deps.iter().find(|&&d| d >= op.seq) {
            return Err(ModelError::ForwardDependence { seq: op.seq, dep });
        }
        if (op.op == OpClass::Branch) != op.branch_info.is_some() {
            return Err(ModelError::BranchInfoMismatch { seq: op.seq });
        }
        match (op.op.uses_fu(), &op.fu_kind) {
            (true, None) => return Err(ModelError::MissingFuKind { seq: op.seq, op: op.op }),
            (false, Some(kind)) => {
                return Err(ModelError::UnexpectedFuKind { seq: op.seq, op: op.op, kind: kind.clone() })
            }
            _ => {}
        }
        timers.note(op)?;
        if let Some(branch) = &op.branch_info {
            check_stream(&branch.alt_path, op.seq + 1, timers)?;
        }
    }
    Ok(())
}

/// Declarative description of one µop, before sequence numbers are assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpSpec {
    pub op: OpClass,
    pub deps: Vec<Seq>,
    pub fu_kind: Option<String>,
    pub branch: Option<BranchSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchSpec {
    pub predicted: bool,
    pub actual: bool,
    pub alt_path: Vec<OpSpec>,
}

impl OpSpec {
    pub fn new(op: OpClass) -> Self {
        OpSpec { op, deps: Vec::new(), fu_kind: op.default_fu_kind().map(str::to_owned), branch: None }
    }

    pub fn div() -> Self {
        Self::new(OpClass::FpDiv)
    }

    pub fn alu() -> Self {
        Self::new(OpClass::IntAlu)
    }

    pub fn branch(predicted: bool, actual: bool, alt_path: Vec<OpSpec>) -> Self {
        OpSpec { branch: Some(BranchSpec { predicted, actual, alt_path }), ..Self::new(OpClass::Branch) }
    }

    pub fn after<I: IntoIterator<Item = Seq>>(mut self, deps: I) -> Self {
        self.deps.extend(deps);
        self
    }

    pub fn on_unit(mut self, kind: impl Into<String>) -> Self {
        self.fu_kind = Some(kind.into());
        self
    }
}

fn number(specs: &[OpSpec], base: Seq) -> Vec<MicroOp> {
    specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let seq = base + i as Seq;
            MicroOp {
                seq,
                op: spec.op,
                deps: spec.deps.iter().copied().collect(),
                branch_info: spec.branch.as_ref().map(|b| BranchInfo {
                    predicted_outcome: b.predicted,
                    actual_outcome: b.actual,
                    alt_path: number(&b.alt_path, seq + 1),
                }),
                fu_kind: spec.fu_kind.clone(),
            }
        })
        .collect()
}

/// Assigns sequence numbers in listed order and validates the result.
///
/// Alternate-path entries are numbered as if they directly followed their
/// branch, so deps inside an alternate path use the same numbering.
pub fn build_program(label: impl Into<String>, specs: &[OpSpec]) -> Result<Program, ModelError> {
    Program::from_ops(label, number(specs, 0))
}

/// Incremental builder that hands back the seq of each pushed µop.
#[derive(Debug, Clone, Default)]
pub struct ProgramBuilder {
    label: String,
    specs: Vec<OpSpec>,
}

impl ProgramBuilder {
    pub fn new(label: impl Into<String>) -> Self {
        ProgramBuilder { label: label.into(), specs: Vec::new() }
    }

    pub fn push(&mut self, spec: OpSpec) -> Seq {
        self.specs.push(spec);
        (self.specs.len() - 1) as Seq
    }

    pub fn next_seq(&self) -> Seq {
        self.specs.len() as Seq
    }

    pub fn build(self) -> Result<Program, ModelError> {
        build_program(self.label, &self.specs)
    }
}
