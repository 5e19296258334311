use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{build_program, OpClass, OpSpec, Program};
use crate::sim::{Trace, UopRecord};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Transient µops signal to younger, later-run code.
    Forward,
    /// Transient µops slow down older µops that go on to retire.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    /// The timed window encloses the transient µops.
    Inclusive,
    Exclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// Leaves state behind that is probed after the squash.
    Stateful,
    /// Only exists while transient and retiring µops execute side by side.
    Concurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Taxonomy {
    pub direction: Direction,
    pub timing: Timing,
    pub channel_kind: ChannelKind,
}

impl fmt::Display for Taxonomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.direction {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        };
        let t = match self.timing {
            Timing::Inclusive => "inclusive",
            Timing::Exclusive => "exclusive",
        };
        let k = match self.channel_kind {
            ChannelKind::Stateful => "stateful",
            ChannelKind::Concurrent => "concurrent",
        };
        write!(f, "{d} / {t} / {k}")
    }
}

/// Both µops held the same kind of unit during some common cycle.
fn overlaps(a: &UopRecord, b: &UopRecord) -> bool {
    if a.fu_kind.is_none() || a.fu_kind != b.fu_kind {
        return false;
    }
    match (a.occupancy(), b.occupancy()) {
        (Some((a0, a1)), Some((b0, b1))) => a0 < b1 && b0 < a1,
        _ => false,
    }
}

/// Classifies a transient attack from its program and simulated trace.
///
/// Channel kind is read off the trace: a transient µop sharing a unit with a
/// retiring µop while both execute makes the channel concurrent.
pub fn classify(program: &Program, trace: &Trace) -> Result<Taxonomy, AnalysisError> {
    let mispredicts = program.all_ops().iter().any(|o| o.branch_info.as_ref().is_some_and(|b| b.mispredicted()));
    if !mispredicts {
        return Err(AnalysisError::Unclassifiable("program has no mispredicted branch".into()));
    }
    let transients: Vec<&UopRecord> = trace.transients().collect();
    let seqs: BTreeSet<_> = transients.iter().map(|r| r.seq).collect();
    let (Some(&first), Some(&last)) = (seqs.first(), seqs.last()) else {
        return Err(AnalysisError::Unclassifiable("trace has no transient µops".into()));
    };
    let retired: Vec<&UopRecord> = trace.retired().collect();

    let backward = transients.iter().any(|t| {
        retired.iter().any(|v| {
            v.seq < t.seq && overlaps(t, v) && matches!((t.issue_cycle, v.complete_cycle), (Some(i), Some(c)) if i < c)
        })
    });
    let concurrent = transients.iter().any(|t| retired.iter().any(|v| overlaps(t, v)));
    let inclusive = match (trace.timer(OpClass::TimerStart), trace.timer(OpClass::TimerStop)) {
        (Some(start), Some(stop)) => start.seq < first && stop.seq > last,
        _ => false,
    };

    Ok(Taxonomy {
        direction: if backward { Direction::Backward } else { Direction::Forward },
        timing: if inclusive { Timing::Inclusive } else { Timing::Exclusive },
        channel_kind: if concurrent { ChannelKind::Concurrent } else { ChannelKind::Stateful },
    })
}

fn record(seq: u32, op: OpClass, dispatch: u64, issue: u64, complete: u64) -> UopRecord {
    let fu_kind = op.default_fu_kind().map(String::from);
    UopRecord {
        seq,
        op,
        stages: if fu_kind.is_some() { vec![1] } else { vec![] },
        fu_kind,
        dispatch_cycle: dispatch,
        issue_cycle: Some(issue),
        complete_cycle: Some(complete),
        retire_cycle: Some(complete),
        squash_cycle: None,
        transient: false,
    }
}

/// Hand-built bounds-check-bypass cache gadget: a slow bounds load, a
/// mispredicted check, two transient loads that leave a line behind, and a
/// timed probe load that only starts after the squash.
///
/// Cache state is not simulated, so the trace is written out by hand.
pub fn forward_stateful_fixture() -> (Program, Trace) {
    let program = build_program(
        "cache-gadget",
        &[
            OpSpec::new(OpClass::Load),
            OpSpec::branch(
                true,
                false,
                vec![OpSpec::new(OpClass::TimerStart), OpSpec::new(OpClass::Load), OpSpec::new(OpClass::TimerStop)],
            )
            .after([0]),
            OpSpec::new(OpClass::Load),
            OpSpec::new(OpClass::Load).after([2]),
        ],
    )
    .expect("static program is valid");

    let squashed = |mut r: UopRecord| {
        r.retire_cycle = None;
        r.squash_cycle = Some(102);
        r.transient = true;
        r
    };
    let records = vec![
        // Bounds value misses in the cache: 100 cycles until it returns.
        record(0, OpClass::Load, 0, 1, 101),
        record(1, OpClass::Branch, 0, 101, 102),
        squashed(record(2, OpClass::Load, 0, 2, 6)),
        squashed(record(3, OpClass::Load, 0, 6, 10)),
        record(4, OpClass::TimerStart, 103, 104, 105),
        record(5, OpClass::Load, 103, 105, 107),
        record(6, OpClass::TimerStop, 103, 107, 108),
    ];
    let trace = Trace { records, attack_time: Some(3), total_cycles: 109, events: Vec::new() };
    (program, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{appendix_scenario, fig4_scenario, gen_channel_program, ChannelParams, Fig4Variant};
    use crate::model::CoreConfig;
    use crate::sim;

    fn channel(bit: u8, params: &ChannelParams) -> (Program, Trace) {
        let p = gen_channel_program(bit, params).unwrap();
        let t = sim::run(&p, &CoreConfig::skylake()).unwrap();
        (p, t)
    }

    #[test]
    fn default_channel_is_backward_inclusive_concurrent() {
        let (p, t) = channel(1, &ChannelParams::default());
        let tax = classify(&p, &t).unwrap();
        assert_eq!(tax.to_string(), "backward / inclusive / concurrent");
    }

    #[test]
    fn stable_under_trial_count() {
        let a = channel(1, &ChannelParams::default().with_trials(1));
        let b = channel(1, &ChannelParams::default().with_trials(5000));
        assert_eq!(classify(&a.0, &a.1).unwrap(), classify(&b.0, &b.1).unwrap());
    }

    #[test]
    fn fixture_is_forward_exclusive_stateful() {
        let (p, t) = forward_stateful_fixture();
        assert_eq!(classify(&p, &t).unwrap().to_string(), "forward / exclusive / stateful");
    }

    #[test]
    fn fixture_trace_is_self_consistent() {
        let (p, t) = forward_stateful_fixture();
        assert_eq!(t.timer(OpClass::TimerStop).unwrap().retire_cycle.unwrap() - 105, t.attack_time.unwrap());
        assert_eq!(t.transients().map(|r| r.seq).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(p.len(), 4);
    }

    #[test]
    fn blocking_unit_scenario_is_backward() {
        let s = fig4_scenario(Fig4Variant::WaitingVictimBlocking);
        let out = s.run().unwrap();
        assert_eq!(classify(&s.program, &out.trace).unwrap().direction, Direction::Backward);
        let s = appendix_scenario();
        let out = s.run().unwrap();
        assert_eq!(classify(&s.program, &out.trace).unwrap().direction, Direction::Backward);
    }

    #[test]
    fn no_transients_is_unclassifiable() {
        let (p, _) = channel(1, &ChannelParams::default());
        let stripped = p.without_transients();
        let t = sim::run(&stripped, &CoreConfig::skylake()).unwrap();
        assert!(matches!(classify(&stripped, &t), Err(AnalysisError::Unclassifiable(_))));
        let empty = Trace { records: vec![], attack_time: None, total_cycles: 0, events: vec![] };
        assert!(matches!(classify(&p, &empty), Err(AnalysisError::Unclassifiable(_))));
    }

    #[test]
    fn effect_needs_overlap() {
        // Without the transient senders the bit-1 program times like bit 0.
        let params = ChannelParams::default();
        let (p1, _) = channel(1, &params);
        let (_, t0) = channel(0, &params);
        let stripped = sim::run(&p1.without_transients(), &CoreConfig::skylake()).unwrap();
        assert_eq!(stripped.attack_time, t0.attack_time);
    }
}
