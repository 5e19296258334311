use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::fu::{FuPreset, FunctionalUnitSpec};
use super::{ModelError, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SchedulerPolicy {
    /// Per port, the ready µop with the smallest sequence number issues.
    #[default]
    OldestFirstReady,
    /// A µop issues only once every older unretired µop has issued.
    StrictInOrder,
}

impl fmt::Display for SchedulerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchedulerPolicy::OldestFirstReady => "oldest-first",
            SchedulerPolicy::StrictInOrder => "strict-in-order",
        })
    }
}

impl FromStr for SchedulerPolicy {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oldest-first" | "oldest-first-ready" | "OldestFirstReady" => Ok(SchedulerPolicy::OldestFirstReady),
            "strict-in-order" | "StrictInOrder" => Ok(SchedulerPolicy::StrictInOrder),
            _ => Err(ModelError::InvalidConfig(format!(
                "unknown policy `{s}` (expected oldest-first or strict-in-order)"
            ))),
        }
    }
}

/// An issue port and the functional-unit kinds it can feed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortSpec {
    pub port_id: u32,
    pub fu_kinds: BTreeSet<String>,
}

impl PortSpec {
    pub fn new<I, S>(port_id: u32, kinds: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { port_id, fu_kinds: kinds.into_iter().map(Into::into).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoreConfig {
    pub rob_size: u32,
    pub scheduler_size: u32,
    pub dispatch_width: u32,
    pub retire_width: u32,
    pub ports: Vec<PortSpec>,
    pub fus: Vec<FunctionalUnitSpec>,
    pub policy: SchedulerPolicy,
    pub resteer_delay: u32,
}

#[derive(Serialize)]
struct ConfigDocRef<'a> {
    v: u32,
    #[serde(flatten)]
    config: &'a CoreConfig,
}

#[derive(Deserialize)]
struct ConfigDoc {
    v: u32,
    #[serde(flatten)]
    config: CoreConfig,
}

impl CoreConfig {
    pub const PRESETS: [&'static str; 3] = ["skylake", "haswell", "appendix"];

    /// A Skylake-like core: 224-entry ROB, 97-entry scheduler, 4-wide.
    pub fn skylake() -> Self {
        Self::client_core(FuPreset::SkylakeDivsd)
    }

    pub fn haswell() -> Self {
        let mut cfg = Self::client_core(FuPreset::HaswellDivsd);
        cfg.rob_size = 192;
        cfg.scheduler_size = 60;
        cfg
    }

    fn client_core(divider: FuPreset) -> Self {
        CoreConfig {
            rob_size: 224,
            scheduler_size: 97,
            dispatch_width: 4,
            retire_width: 4,
            ports: vec![
                PortSpec::new(0, ["fp_div", "fp_mul"]),
                PortSpec::new(1, ["fp_mul", "int_alu"]),
                PortSpec::new(2, ["load"]),
                PortSpec::new(3, ["load"]),
                PortSpec::new(5, ["int_alu"]),
                PortSpec::new(6, ["int_alu"]),
            ],
            fus: vec![
                divider.spec(),
                FuPreset::FpMul.spec().with_count(2),
                FuPreset::IntAlu.spec().with_count(3),
                FuPreset::Load.spec().with_count(2),
            ],
            policy: SchedulerPolicy::OldestFirstReady,
            resteer_delay: 1,
        }
    }

    /// Small core with one shared two-stage divider and a separate ALU port.
    pub fn appendix() -> Self {
        CoreConfig {
            rob_size: 32,
            scheduler_size: 16,
            dispatch_width: 4,
            retire_width: 4,
            ports: vec![
                PortSpec::new(0, ["fp_div", "fp_mul"]),
                PortSpec::new(1, ["int_alu"]),
                PortSpec::new(2, ["load"]),
            ],
            fus: vec![
                FuPreset::AppendixUnit.spec(),
                FuPreset::FpMul.spec(),
                FuPreset::IntAlu.spec(),
                FuPreset::Load.spec(),
            ],
            policy: SchedulerPolicy::OldestFirstReady,
            resteer_delay: 1,
        }
    }

    pub fn preset(name: &str) -> Result<Self, ModelError> {
        match name {
            "skylake" => Ok(Self::skylake()),
            "haswell" => Ok(Self::haswell()),
            "appendix" => Ok(Self::appendix()),
            _ => Err(ModelError::UnknownPreset { name: name.to_string(), valid: Self::PRESETS.join(", ") }),
        }
    }

    /// Replaces the unit of the same kind, or appends it.
    pub fn with_fu(mut self, fu: FunctionalUnitSpec) -> Self {
        match self.fus.iter_mut().find(|f| f.kind == fu.kind) {
            Some(slot) => *slot = fu,
            None => self.fus.push(fu),
        }
        self
    }

    pub fn with_policy(mut self, policy: SchedulerPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_rob_size(mut self, rob_size: u32) -> Self {
        self.rob_size = rob_size;
        self.scheduler_size = self.scheduler_size.min(rob_size);
        self
    }

    pub fn fu(&self, kind: &str) -> Option<&FunctionalUnitSpec> {
        self.fus.iter().find(|f| f.kind == kind)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.scheduler_size < 1 {
            return Err(ModelError::InvalidConfig("scheduler_size must be at least 1".into()));
        }
        if self.rob_size < self.scheduler_size {
            return Err(ModelError::InvalidConfig(format!(
                "rob_size ({}) must be >= scheduler_size ({})",
                self.rob_size, self.scheduler_size
            )));
        }
        if self.dispatch_width < 1 || self.retire_width < 1 {
            return Err(ModelError::InvalidConfig("dispatch_width and retire_width must be at least 1".into()));
        }
        let mut seen = BTreeSet::new();
        for fu in &self.fus {
            fu.validate()?;
            if !seen.insert(fu.kind.as_str()) {
                return Err(ModelError::InvalidConfig(format!("duplicate functional unit kind `{}`", fu.kind)));
            }
        }
        let mut ids = BTreeSet::new();
        for port in &self.ports {
            if !ids.insert(port.port_id) {
                return Err(ModelError::InvalidConfig(format!("duplicate port id {}", port.port_id)));
            }
            if let Some(kind) = port.fu_kinds.iter().find(|k| !seen.contains(k.as_str())) {
                return Err(ModelError::InvalidConfig(format!(
                    "port {} references unknown functional unit `{kind}`",
                    port.port_id
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ConfigDocRef { v: SCHEMA_VERSION, config: self }).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: ConfigDoc = super::parse_json(text)?;
        if doc.v != SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion(doc.v));
        }
        doc.config.validate()?;
        Ok(doc.config)
    }
}
