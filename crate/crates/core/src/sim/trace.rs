use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{Cycle, OpClass, Seq};

/// Lifecycle of one dispatched µop.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UopRecord {
    pub seq: Seq,
    pub op: OpClass,
    pub fu_kind: Option<String>,
    /// Stage latencies of the unit it ran on; empty for µops without a unit.
    pub stages: Vec<u32>,
    pub dispatch_cycle: Cycle,
    pub issue_cycle: Option<Cycle>,
    pub complete_cycle: Option<Cycle>,
    pub retire_cycle: Option<Cycle>,
    pub squash_cycle: Option<Cycle>,
    pub transient: bool,
}

impl UopRecord {
    /// Cycle at which the unit stops being held by this µop, if it ever
    /// issued onto one. Squashed µops release it the cycle after the squash.
    pub fn occupancy(&self) -> Option<(Cycle, Cycle)> {
        let issue = self.issue_cycle?;
        self.fu_kind.as_ref()?;
        let natural = issue + self.stages.iter().map(|&l| Cycle::from(l)).sum::<Cycle>();
        let end = match self.squash_cycle {
            Some(sq) => natural.min(sq + 1),
            None => natural,
        };
        Some((issue, end.max(issue + 1)))
    }
}

/// Ordered by the within-cycle tie order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    Resolve,
    Squash,
    Issue,
    Complete,
    Dispatch,
    Retire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub cycle: Cycle,
    pub kind: EventKind,
    pub seq: Seq,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trace {
    /// Sorted by seq.
    pub records: Vec<UopRecord>,
    pub attack_time: Option<Cycle>,
    pub total_cycles: Cycle,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn get(&self, seq: Seq) -> Option<&UopRecord> {
        self.records.binary_search_by_key(&seq, |r| r.seq).ok().map(|i| &self.records[i])
    }

    pub fn retired(&self) -> impl Iterator<Item = &UopRecord> {
        self.records.iter().filter(|r| r.retire_cycle.is_some())
    }

    pub fn transients(&self) -> impl Iterator<Item = &UopRecord> {
        self.records.iter().filter(|r| r.transient)
    }

    pub fn timer(&self, op: OpClass) -> Option<&UopRecord> {
        self.records.iter().find(|r| r.op == op && r.retire_cycle.is_some())
    }

    /// Retired seqs in retirement order.
    pub fn retirement_order(&self) -> Vec<Seq> {
        let mut retired: Vec<_> = self.retired().map(|r| (r.retire_cycle.unwrap(), r.seq)).collect();
        retired.sort();
        retired.into_iter().map(|(_, s)| s).collect()
    }

    /// CSV with columns `seq,op,dispatch,issue,complete,retire,squash,transient`;
    /// absent cycles are empty fields.
    pub fn to_csv(&self) -> String {
        fn opt(c: Option<Cycle>) -> String {
            c.map(|c| c.to_string()).unwrap_or_default()
        }
        let mut out = String::from("seq,op,dispatch,issue,complete,retire,squash,transient\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.seq,
                r.op,
                r.dispatch_cycle,
                opt(r.issue_cycle),
                opt(r.complete_cycle),
                opt(r.retire_cycle),
                opt(r.squash_cycle),
                r.transient
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(seq: Seq) -> UopRecord {
        UopRecord {
            seq,
            op: OpClass::FpDiv,
            fu_kind: Some("fp_div".into()),
            stages: vec![3, 1],
            dispatch_cycle: 0,
            issue_cycle: Some(2),
            complete_cycle: Some(6),
            retire_cycle: Some(6),
            squash_cycle: None,
            transient: false,
        }
    }

    #[test]
    fn csv_leaves_absent_cycles_empty() {
        let mut r = rec(3);
        r.complete_cycle = None;
        r.retire_cycle = None;
        r.squash_cycle = Some(4);
        r.transient = true;
        let t = Trace { records: vec![r], attack_time: None, total_cycles: 4, events: vec![] };
        assert_eq!(t.to_csv().lines().nth(1).unwrap(), "3,FpDiv,0,2,,,4,true");
    }

    #[test]
    fn squashed_occupancy_is_truncated() {
        let mut r = rec(0);
        assert_eq!(r.occupancy(), Some((2, 6)));
        r.squash_cycle = Some(3);
        assert_eq!(r.occupancy(), Some((2, 4)));
    }
}
