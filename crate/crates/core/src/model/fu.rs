use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// One stage of a functional unit.
///
/// A non-pipelined stage admits a single µop and stays closed for its whole
/// latency. A pipelined stage of latency `L` is an `L`-deep pipe that accepts
/// one new µop per cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StageSpec {
    pub latency: u32,
    pub pipelined: bool,
}

impl StageSpec {
    pub const fn pipelined(latency: u32) -> Self {
        Self { latency, pipelined: true }
    }

    pub const fn blocking(latency: u32) -> Self {
        Self { latency, pipelined: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionalUnitSpec {
    pub kind: String,
    pub stages: Vec<StageSpec>,
    pub count: u32,
}

impl FunctionalUnitSpec {
    pub fn new(kind: impl Into<String>, stages: Vec<StageSpec>) -> Self {
        Self { kind: kind.into(), stages, count: 1 }
    }

    pub fn with_count(mut self, count: u32) -> Self {
        self.count = count;
        self
    }

    pub fn total_latency(&self) -> u32 {
        self.stages.iter().map(|s| s.latency).sum()
    }

    /// Cycles between successive issues into one instance of the unit.
    ///
    /// This is the longest non-pipelined stage, or 1 when every stage is
    /// pipelined. For the two-stage divider presets it is the first stage.
    pub fn initiation_interval(&self) -> u32 {
        self.stages.iter().filter(|s| !s.pipelined).map(|s| s.latency).max().unwrap_or(1)
    }

    pub fn is_fully_pipelined(&self) -> bool {
        self.stages.iter().all(|s| s.pipelined)
    }

    /// Cycle offset (relative to issue) at which each stage is entered.
    pub fn stage_offsets(&self) -> Vec<u32> {
        self.stages
            .iter()
            .scan(0, |acc, s| {
                let start = *acc;
                *acc += s.latency;
                Some(start)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.kind.is_empty() {
            return Err(ModelError::InvalidUnit { kind: self.kind.clone(), reason: "empty kind".into() });
        }
        if self.stages.is_empty() {
            return Err(ModelError::InvalidUnit { kind: self.kind.clone(), reason: "no stages".into() });
        }
        if self.stages.iter().any(|s| s.latency == 0) {
            return Err(ModelError::InvalidUnit {
                kind: self.kind.clone(),
                reason: "stage latency must be at least 1".into(),
            });
        }
        if self.count == 0 {
            return Err(ModelError::InvalidUnit { kind: self.kind.clone(), reason: "count must be at least 1".into() });
        }
        Ok(())
    }
}

/// Named functional-unit presets.
///
/// Divider presets use a blocking first stage whose latency is the measured
/// throughput, followed by a pipelined stage carrying the rest of the latency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuPreset {
    SkylakeDivsd,
    HaswellDivsd,
    FullyPipelinedDivsd,
    AppendixUnit,
    FpMul,
    IntAlu,
    Load,
}

impl FuPreset {
    pub const ALL: [FuPreset; 7] = [
        FuPreset::SkylakeDivsd,
        FuPreset::HaswellDivsd,
        FuPreset::FullyPipelinedDivsd,
        FuPreset::AppendixUnit,
        FuPreset::FpMul,
        FuPreset::IntAlu,
        FuPreset::Load,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FuPreset::SkylakeDivsd => "skylake_divsd",
            FuPreset::HaswellDivsd => "haswell_divsd",
            FuPreset::FullyPipelinedDivsd => "fully_pipelined_divsd",
            FuPreset::AppendixUnit => "appendix_unit",
            FuPreset::FpMul => "fp_mul",
            FuPreset::IntAlu => "int_alu",
            FuPreset::Load => "load",
        }
    }

    pub fn spec(self) -> FunctionalUnitSpec {
        use StageSpec as S;
        match self {
            // 13--15 cycle latency, throughput 4
            FuPreset::SkylakeDivsd => FunctionalUnitSpec::new("fp_div", vec![S::blocking(4), S::pipelined(9)]),
            // throughput 8
            FuPreset::HaswellDivsd => FunctionalUnitSpec::new("fp_div", vec![S::blocking(8), S::pipelined(8)]),
            FuPreset::FullyPipelinedDivsd => FunctionalUnitSpec::new("fp_div", vec![S::pipelined(13)]),
            FuPreset::AppendixUnit => FunctionalUnitSpec::new("fp_div", vec![S::blocking(3), S::pipelined(1)]),
            FuPreset::FpMul => FunctionalUnitSpec::new("fp_mul", vec![S::pipelined(4)]),
            FuPreset::IntAlu => FunctionalUnitSpec::new("int_alu", vec![S::pipelined(1)]),
            FuPreset::Load => FunctionalUnitSpec::new("load", vec![S::pipelined(1)]),
        }
    }
}

impl fmt::Display for FuPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FuPreset {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FuPreset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| ModelError::UnknownPreset {
            name: s.to_string(),
            valid: FuPreset::ALL.iter().map(|p| p.name()).collect::<Vec<_>>().join(", "),
        })
    }
}

pub fn preset_fu(name: &str) -> Result<FunctionalUnitSpec, ModelError> {
    Ok(name.parse::<FuPreset>()?.spec())
}
