use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::model::{CoreConfig, Cycle, FuPreset, OpClass, OpSpec, Program, ProgramBuilder, Seq};
use crate::sim::{self, Trace};

use super::{ChannelError, ChannelParams};

/// Where each part of a generated channel program sits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelLayout {
    pub timer_start: Seq,
    pub receivers: Range<Seq>,
    pub outer_branch: Seq,
    pub secret_load: Seq,
    pub inner_branch: Seq,
    /// Bit-0 path: ALU ops on another unit, squashed by the outer branch.
    pub fillers: Range<Seq>,
}

impl ChannelLayout {
    pub fn new(params: &ChannelParams) -> Self {
        let n = params.n_recv_divs;
        let outer = n + 1;
        ChannelLayout {
            timer_start: 0,
            receivers: 1..n + 1,
            outer_branch: outer,
            secret_load: outer + 1,
            inner_branch: outer + 2,
            fillers: outer + 3..outer + 3 + params.sender_count(),
        }
    }

    /// Sender divisions in a trace: the transient divisions younger than the
    /// outer branch.
    pub fn senders<'t>(&self, trace: &'t Trace) -> impl Iterator<Item = &'t sim::UopRecord> {
        let outer = self.outer_branch;
        trace.records.iter().filter(move |r| r.op == OpClass::FpDiv && r.seq > outer)
    }
}

/// One bit through the contention channel.
///
/// ```text
/// TimerStart
/// recv_0 .. recv_{n-1}      dependent divisions
/// outer branch on recv      predicted taken, actually not taken -> [TimerStop]
///   load secret             transient
///   inner branch on secret  predicted not taken, actually `bit` -> [senders]
///   fillers                 ALU ops on the predicted bit-0 path
/// ```
///
/// With `bit = 1` the inner branch re-steers into independent divisions that
/// fight the receiver chain for the divider until the outer branch resolves.
pub fn gen_channel_program(bit: u8, params: &ChannelParams) -> Result<Program, ChannelError> {
    params.validate()?;
    if bit > 1 {
        return Err(ChannelError::InvalidParams(format!("bit value {bit} is not 0 or 1")));
    }
    let senders = params.sender_count();
    let mut b = ProgramBuilder::new(format!("channel{bit}-recv{}", params.n_recv_divs));
    b.push(OpSpec::new(OpClass::TimerStart));
    let mut last = b.push(OpSpec::div());
    for _ in 1..params.n_recv_divs {
        last = b.push(OpSpec::div().after([last]));
    }
    b.push(OpSpec::branch(true, false, vec![OpSpec::new(OpClass::TimerStop)]).after([last]));
    let load = b.push(OpSpec::new(OpClass::Load));
    let sender_path = (0..senders).map(|_| OpSpec::div()).collect();
    b.push(OpSpec::branch(false, bit == 1, sender_path).after([load]));
    for _ in 0..senders {
        b.push(OpSpec::alu());
    }
    Ok(b.build()?)
}

/// Noise-free attack times for bit 0 and bit 1 on `config` with the
/// parameter's divider installed.
pub fn measure_bits(params: &ChannelParams, config: &CoreConfig) -> Result<(Cycle, Cycle), ChannelError> {
    let config = config.clone().with_fu(params.fu_preset.spec());
    let time = |bit| -> Result<Cycle, ChannelError> {
        let trace = sim::run(&gen_channel_program(bit, params)?, &config)?;
        trace.attack_time.ok_or(ChannelError::NoMeasurement)
    };
    Ok((time(0)?, time(1)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fig4Variant {
    /// Victim and attacker ready together on a pipelined unit.
    ReadyVictimPipelined,
    /// Attacker ready one cycle before the victim, pipelined unit.
    WaitingVictimPipelined,
    /// Attacker ready while the victim waits, unit with a blocking stage.
    WaitingVictimBlocking,
}

impl Fig4Variant {
    pub const ALL: [Fig4Variant; 3] =
        [Fig4Variant::ReadyVictimPipelined, Fig4Variant::WaitingVictimPipelined, Fig4Variant::WaitingVictimBlocking];

    pub fn letter(self) -> char {
        match self {
            Fig4Variant::ReadyVictimPipelined => 'a',
            Fig4Variant::WaitingVictimPipelined => 'b',
            Fig4Variant::WaitingVictimBlocking => 'c',
        }
    }
}

impl fmt::Display for Fig4Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Fig4Variant {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Fig4Variant::ALL
            .into_iter()
            .find(|v| s.len() == 1 && s.starts_with(v.letter()))
            .ok_or_else(|| ChannelError::InvalidParams(format!("unknown variant `{s}` (a, b or c)")))
    }
}

/// A victim/attacker experiment together with its attacker-free twin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub program: Program,
    /// Same shape with the attacker ops moved to a different unit.
    pub baseline: Program,
    pub config: CoreConfig,
    pub victims: Vec<Seq>,
    pub attackers: Vec<Seq>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioOutcome {
    pub trace: Trace,
    pub baseline: Trace,
    /// attack_time difference against the baseline.
    pub delta: i64,
    /// Per victim: issue-cycle difference against the baseline.
    pub victim_delays: Vec<i64>,
}

impl Scenario {
    pub fn run(&self) -> Result<ScenarioOutcome, ChannelError> {
        let trace = sim::run(&self.program, &self.config)?;
        let baseline = sim::run(&self.baseline, &self.config)?;
        let time = |t: &Trace| t.attack_time.map(|c| c as i64).ok_or(ChannelError::NoMeasurement);
        let delta = time(&trace)? - time(&baseline)?;
        let issue = |t: &Trace, s: Seq| t.get(s).and_then(|r| r.issue_cycle).map_or(0, |c| c as i64);
        let victim_delays = self.victims.iter().map(|&v| issue(&trace, v) - issue(&baseline, v)).collect();
        Ok(ScenarioOutcome { trace, baseline, delta, victim_delays })
    }
}

fn fig4_program(variant: Fig4Variant, attacker: bool) -> (Program, Vec<Seq>, Vec<Seq>) {
    let unit_op = match variant {
        Fig4Variant::WaitingVictimBlocking => OpClass::FpDiv,
        _ => OpClass::FpMul,
    };
    let mut b = ProgramBuilder::new(format!("fig4{variant}{}", if attacker { "" } else { "-baseline" }));
    b.push(OpSpec::new(OpClass::TimerStart));
    let victim = match variant {
        Fig4Variant::ReadyVictimPipelined => b.push(OpSpec::new(unit_op)),
        _ => {
            let producer = b.push(OpSpec::alu());
            b.push(OpSpec::new(unit_op).after([producer]))
        }
    };
    b.push(OpSpec::branch(true, false, vec![OpSpec::new(OpClass::TimerStop)]).after([victim]));
    let attacker_op = if attacker { OpSpec::new(unit_op) } else { OpSpec::alu() };
    let a = b.push(attacker_op);
    (b.build().expect("static program is valid"), vec![victim], vec![a])
}

pub fn fig4_scenario(variant: Fig4Variant) -> Scenario {
    let (program, victims, attackers) = fig4_program(variant, true);
    let (baseline, _, _) = fig4_program(variant, false);
    Scenario { name: format!("fig4{variant}"), program, baseline, config: CoreConfig::appendix(), victims, attackers }
}

pub fn gen_fig4_scenario(variant: Fig4Variant) -> (Program, CoreConfig) {
    let s = fig4_scenario(variant);
    (s.program, s.config)
}

fn appendix_program(attacker: bool) -> Program {
    let transient = if attacker { OpSpec::div() } else { OpSpec::alu() };
    let mut b = ProgramBuilder::new(if attacker { "appendix" } else { "appendix-baseline" });
    b.push(OpSpec::new(OpClass::TimerStart));
    let mut last = b.push(OpSpec::div());
    for _ in 0..2 {
        last = b.push(OpSpec::div().after([last]));
    }
    b.push(OpSpec::branch(true, false, vec![OpSpec::new(OpClass::TimerStop)]).after([last]));
    b.push(transient.clone());
    b.push(transient);
    b.build().expect("static program is valid")
}

/// Three dependent victims on a `[3 blocking, 1 pipelined]` divider, a
/// branch on the last one trained to mispredict, and two transient attacker
/// divisions. Seqs are shifted by one for the leading timer.
pub fn appendix_scenario() -> Scenario {
    Scenario {
        name: "appendix".into(),
        program: appendix_program(true),
        baseline: appendix_program(false),
        config: CoreConfig::appendix().with_fu(FuPreset::AppendixUnit.spec()),
        victims: vec![1, 2, 3],
        attackers: vec![5, 6],
    }
}

pub fn gen_appendix_example() -> (Program, CoreConfig) {
    let s = appendix_scenario();
    (s.program, s.config)
}
