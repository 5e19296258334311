use std::collections::{BTreeSet, VecDeque};
use std::rc::Rc;

use crate::model::{CoreConfig, Cycle, MicroOp, OpClass, Program, SchedulerPolicy, Seq};

use super::trace::{Event, EventKind, Trace, UopRecord};
use super::SimError;

/// Cycle ceiling used by [`super::run`].
pub const DEFAULT_CYCLE_LIMIT: Cycle = 1_000_000;

/// Latency of µops that never occupy a functional unit (branches, timers, nops).
const UNITLESS_LATENCY: Cycle = 1;

/// Static-seq to runtime-seq map for one fetched stream.
type Frame = Rc<Vec<Seq>>;

struct Fetch<'p> {
    seq: Seq,
    uop: &'p MicroOp,
    frame: Frame,
}

struct Resteer<'p> {
    at: Cycle,
    branch: Seq,
    /// Static seq of the branch inside `frame`.
    branch_static: Seq,
    alt: &'p [MicroOp],
    frame: Frame,
}

struct Entry<'p> {
    seq: Seq,
    op: OpClass,
    uop: &'p MicroOp,
    frame: Frame,
    deps: Vec<Seq>,
    unit: Option<usize>,
    in_scheduler: bool,
    issued: Option<Cycle>,
    done_at: Option<Cycle>,
    completed: bool,
    resolved: bool,
}

#[derive(Debug, Clone, Copy)]
struct Reservation {
    seq: Seq,
    stage: usize,
    start: Cycle,
    end: Cycle,
}

struct UnitPool {
    offsets: Vec<Cycle>,
    latencies: Vec<Cycle>,
    pipelined: Vec<bool>,
    instances: Vec<Vec<Reservation>>,
}

impl UnitPool {
    fn total_latency(&self) -> Cycle {
        self.latencies.iter().sum()
    }

    fn accepts(&self, instance: usize, at: Cycle) -> bool {
        let table = &self.instances[instance];
        (0..self.latencies.len()).all(|k| {
            let start = at + self.offsets[k];
            let end = start + self.latencies[k];
            table.iter().filter(|r| r.stage == k).all(|r| {
                if self.pipelined[k] {
                    r.start != start
                } else {
                    r.end <= start || end <= r.start
                }
            })
        })
    }

    fn reserve(&mut self, instance: usize, seq: Seq, at: Cycle) {
        for k in 0..self.latencies.len() {
            let start = at + self.offsets[k];
            self.instances[instance].push(Reservation { seq, stage: k, start, end: start + self.latencies[k] });
        }
    }

    /// A squashed µop keeps its current stage through `cycle` and holds
    /// nothing after it.
    fn release(&mut self, seq: Seq, cycle: Cycle) {
        for table in &mut self.instances {
            table.retain_mut(|r| {
                if r.seq != seq {
                    return true;
                }
                if r.start > cycle {
                    return false;
                }
                r.end = r.end.min(cycle + 1);
                true
            });
        }
    }

    fn expire(&mut self, cycle: Cycle) {
        for table in &mut self.instances {
            table.retain(|r| r.end > cycle);
        }
    }
}

/// Single-threaded cycle-stepped core. [`super::run`] drives it to the end;
/// stepping by hand is useful for inspecting intermediate state.
pub struct Simulator<'p> {
    config: &'p CoreConfig,
    cycle: Cycle,
    limit: Cycle,
    fetch: VecDeque<Fetch<'p>>,
    resteers: Vec<Resteer<'p>>,
    rob: VecDeque<Entry<'p>>,
    scheduler_len: usize,
    units: Vec<UnitPool>,
    /// For each unit pool, the ports that can feed it.
    unit_ports: Vec<Vec<usize>>,
    records: Vec<Option<UopRecord>>,
    ready_at: Vec<Option<Cycle>>,
    events: Vec<Event>,
    next_fresh: Seq,
}

impl<'p> Simulator<'p> {
    pub fn new(program: &'p Program, config: &'p CoreConfig) -> Result<Self, SimError> {
        Self::with_limit(program, config, DEFAULT_CYCLE_LIMIT)
    }

    pub fn with_limit(program: &'p Program, config: &'p CoreConfig, limit: Cycle) -> Result<Self, SimError> {
        config.validate()?;
        let units: Vec<UnitPool> = config
            .fus
            .iter()
            .map(|fu| UnitPool {
                offsets: fu.stage_offsets().into_iter().map(Cycle::from).collect(),
                latencies: fu.stages.iter().map(|s| Cycle::from(s.latency)).collect(),
                pipelined: fu.stages.iter().map(|s| s.pipelined).collect(),
                instances: vec![Vec::new(); fu.count as usize],
            })
            .collect();
        let unit_ports: Vec<Vec<usize>> = config
            .fus
            .iter()
            .map(|fu| {
                config.ports.iter().enumerate().filter(|(_, p)| p.fu_kinds.contains(&fu.kind)).map(|(i, _)| i).collect()
            })
            .collect();

        for uop in program.all_ops() {
            if let Some(kind) = &uop.fu_kind {
                let idx = config
                    .fus
                    .iter()
                    .position(|f| &f.kind == kind)
                    .ok_or_else(|| SimError::UnknownUnit { seq: uop.seq, kind: kind.clone() })?;
                if unit_ports[idx].is_empty() {
                    return Err(SimError::UnreachableUnit { kind: kind.clone() });
                }
            }
        }

        let main: Frame = Rc::new((0..program.len() as Seq).collect());
        let fetch = program.ops().iter().map(|uop| Fetch { seq: uop.seq, uop, frame: Rc::clone(&main) }).collect();
        Ok(Simulator {
            config,
            cycle: 0,
            limit,
            fetch,
            resteers: Vec::new(),
            rob: VecDeque::new(),
            scheduler_len: 0,
            units,
            unit_ports,
            records: Vec::new(),
            ready_at: Vec::new(),
            events: Vec::new(),
            next_fresh: program.len() as Seq,
        })
    }

    pub fn cycle(&self) -> Cycle {
        self.cycle
    }

    pub fn is_done(&self) -> bool {
        self.rob.is_empty() && self.fetch.is_empty() && self.resteers.is_empty()
    }

    /// Seqs currently in the ROB, oldest first.
    pub fn in_flight(&self) -> Vec<Seq> {
        self.rob.iter().map(|e| e.seq).collect()
    }

    pub fn record(&self, seq: Seq) -> Option<&UopRecord> {
        self.records.get(seq as usize).and_then(Option::as_ref)
    }

    /// µops a mispredicted branch would remove: everything younger that is
    /// dispatched and not yet retired.
    pub fn squash_set(&self, branch_seq: Seq) -> Result<BTreeSet<Seq>, SimError> {
        let entry = self.rob.iter().find(|e| e.seq == branch_seq).ok_or(SimError::NotInFlight { seq: branch_seq })?;
        match &entry.uop.branch_info {
            Some(info) if info.mispredicted() => {}
            _ => return Err(SimError::NotMispredicted { seq: branch_seq }),
        }
        Ok(self.rob.iter().filter(|e| e.seq > branch_seq).map(|e| e.seq).collect())
    }

    /// Runs one cycle. Returns `false` once there is nothing left to do.
    pub fn step(&mut self) -> Result<bool, SimError> {
        if self.is_done() {
            return Ok(false);
        }
        if self.cycle > self.limit {
            return Err(SimError::CycleLimit(self.limit));
        }
        let c = self.cycle;
        for pool in &mut self.units {
            pool.expire(c);
        }
        self.resolve_branches(c);
        self.issue(c);
        self.complete(c);
        self.dispatch(c);
        self.retire(c);
        self.cycle += 1;
        Ok(true)
    }

    pub fn run_to_end(mut self) -> Result<Trace, SimError> {
        while self.step()? {}
        Ok(self.into_trace())
    }

    pub fn into_trace(mut self) -> Trace {
        self.events.sort_by_key(|e| (e.cycle, e.kind));
        let records: Vec<UopRecord> = self.records.into_iter().flatten().collect();
        let retired = |op| records.iter().find(|r| r.op == op).and_then(|r| r.retire_cycle);
        let attack_time = match (retired(OpClass::TimerStart), retired(OpClass::TimerStop)) {
            (Some(start), Some(stop)) => Some(stop - start),
            _ => None,
        };
        let total_cycles = self.events.last().map_or(0, |e| e.cycle);
        Trace { records, attack_time, total_cycles, events: self.events }
    }

    fn log(&mut self, cycle: Cycle, kind: EventKind, seq: Seq) {
        self.events.push(Event { cycle, kind, seq });
    }

    fn rec(&mut self, seq: Seq) -> &mut UopRecord {
        self.records[seq as usize].as_mut().expect("record exists for dispatched µop")
    }

    fn resolve_branches(&mut self, c: Cycle) {
        let Some(idx) = self.rob.iter().position(|e| e.op == OpClass::Branch && !e.resolved && e.done_at == Some(c))
        else {
            return;
        };
        // Oldest first; a mispredict removes every younger branch with it.
        let mut i = idx;
        while i < self.rob.len() {
            let e = &mut self.rob[i];
            if e.op != OpClass::Branch || e.resolved || e.done_at != Some(c) {
                i += 1;
                continue;
            }
            e.resolved = true;
            let seq = e.seq;
            let info = e.uop.branch_info.as_ref().expect("validated branch");
            let mispredicted = info.mispredicted();
            let alt = info.alt_path.as_slice();
            let branch_static = e.uop.seq;
            let frame = Rc::clone(&e.frame);
            self.log(c, EventKind::Resolve, seq);
            if mispredicted {
                self.squash_younger(seq, c);
                if !alt.is_empty() {
                    let at = c + Cycle::from(self.config.resteer_delay);
                    self.resteers.push(Resteer { at, branch: seq, branch_static, alt, frame });
                }
                return;
            }
            i += 1;
        }
    }

    fn squash_younger(&mut self, branch: Seq, c: Cycle) {
        let mut squashed = Vec::new();
        while self.rob.back().is_some_and(|e| e.seq > branch) {
            squashed.push(self.rob.pop_back().expect("non-empty"));
        }
        for e in squashed.into_iter().rev() {
            if e.in_scheduler {
                self.scheduler_len -= 1;
            }
            if let (Some(unit), Some(_)) = (e.unit, e.issued) {
                self.units[unit].release(e.seq, c);
            }
            let rec = self.rec(e.seq);
            rec.squash_cycle = Some(c);
            rec.transient = true;
            self.log(c, EventKind::Squash, e.seq);
        }
        self.fetch.clear();
        self.resteers.retain(|r| r.branch <= branch);
    }

    fn deps_ready(&self, deps: &[Seq], c: Cycle) -> bool {
        deps.iter().all(|&d| self.ready_at[d as usize].is_some_and(|t| t <= c))
    }

    fn issue(&mut self, c: Cycle) {
        let strict = self.config.policy == SchedulerPolicy::StrictInOrder;
        let mut port_busy = vec![false; self.config.ports.len()];
        let mut all_older_issued = true;
        let mut all_older_complete = true;
        let mut fence_open = true;

        for i in 0..self.rob.len() {
            let e = &self.rob[i];
            let candidate = e.in_scheduler
                && e.issued.is_none()
                && fence_open
                && (!strict || all_older_issued)
                && (!e.op.is_timer() || all_older_complete)
                && self.deps_ready(&e.deps, c);

            if candidate {
                let (seq, unit) = (e.seq, e.unit);
                let done_at = match unit {
                    None => Some(c + UNITLESS_LATENCY),
                    Some(u) => self.claim_unit(u, seq, c, &mut port_busy),
                };
                if let Some(done_at) = done_at {
                    let e = &mut self.rob[i];
                    e.issued = Some(c);
                    e.done_at = Some(done_at);
                    e.in_scheduler = false;
                    self.scheduler_len -= 1;
                    self.ready_at[seq as usize] = Some(done_at);
                    self.rec(seq).issue_cycle = Some(c);
                    self.log(c, EventKind::Issue, seq);
                }
            }

            let e = &self.rob[i];
            if e.issued.is_none() {
                all_older_issued = false;
            }
            if !e.done_at.is_some_and(|t| t <= c) {
                all_older_complete = false;
                if e.op.is_timer() {
                    fence_open = false;
                }
            }
        }
    }

    /// Finds a free port and a unit instance able to take the µop this cycle.
    fn claim_unit(&mut self, unit: usize, seq: Seq, c: Cycle, port_busy: &mut [bool]) -> Option<Cycle> {
        let port = *self.unit_ports[unit].iter().find(|&&p| !port_busy[p])?;
        let pool = &mut self.units[unit];
        let instance = (0..pool.instances.len()).find(|&k| pool.accepts(k, c))?;
        pool.reserve(instance, seq, c);
        port_busy[port] = true;
        Some(c + pool.total_latency())
    }

    fn complete(&mut self, c: Cycle) {
        let done: Vec<Seq> = self
            .rob
            .iter_mut()
            .filter(|e| !e.completed && e.done_at == Some(c))
            .map(|e| {
                e.completed = true;
                e.seq
            })
            .collect();
        for seq in done {
            self.rec(seq).complete_cycle = Some(c);
            self.log(c, EventKind::Complete, seq);
        }
    }

    fn dispatch(&mut self, c: Cycle) {
        let due: Vec<Resteer<'p>> = {
            let (due, keep) = std::mem::take(&mut self.resteers).into_iter().partition(|r| r.at <= c);
            self.resteers = keep;
            due
        };
        for r in due {
            let mut map: Vec<Seq> = r.frame[..=r.branch_static as usize].to_vec();
            for _ in r.alt {
                map.push(self.next_fresh);
                self.next_fresh += 1;
            }
            let frame: Frame = Rc::new(map);
            for uop in r.alt {
                let seq = frame[uop.seq as usize];
                self.fetch.push_back(Fetch { seq, uop, frame: Rc::clone(&frame) });
            }
        }

        let capacity = self.config.scheduler_size as usize;
        for e in self.rob.iter_mut() {
            if self.scheduler_len >= capacity {
                break;
            }
            if !e.in_scheduler && e.issued.is_none() {
                e.in_scheduler = true;
                self.scheduler_len += 1;
            }
        }

        for _ in 0..self.config.dispatch_width {
            if self.rob.len() >= self.config.rob_size as usize {
                break;
            }
            let Some(f) = self.fetch.pop_front() else { break };
            let unit = f
                .uop
                .fu_kind
                .as_ref()
                .map(|k| self.config.fus.iter().position(|fu| &fu.kind == k).expect("checked before cycle 0"));
            let waiting = self.rob.iter().any(|e| !e.in_scheduler && e.issued.is_none());
            let in_scheduler = !waiting && self.scheduler_len < capacity;
            if in_scheduler {
                self.scheduler_len += 1;
            }
            let idx = f.seq as usize;
            if self.records.len() <= idx {
                self.records.resize(idx + 1, None);
                self.ready_at.resize(idx + 1, None);
            }
            self.records[idx] = Some(UopRecord {
                seq: f.seq,
                op: f.uop.op,
                fu_kind: f.uop.fu_kind.clone(),
                stages: unit.map(|u| self.config.fus[u].stages.iter().map(|s| s.latency).collect()).unwrap_or_default(),
                dispatch_cycle: c,
                issue_cycle: None,
                complete_cycle: None,
                retire_cycle: None,
                squash_cycle: None,
                transient: false,
            });
            self.log(c, EventKind::Dispatch, f.seq);
            self.rob.push_back(Entry {
                seq: f.seq,
                op: f.uop.op,
                uop: f.uop,
                deps: f.uop.deps.iter().map(|&d| f.frame[d as usize]).collect(),
                frame: f.frame,
                unit,
                in_scheduler,
                issued: None,
                done_at: None,
                completed: false,
                resolved: false,
            });
        }
    }

    fn retire(&mut self, c: Cycle) {
        for _ in 0..self.config.retire_width {
            match self.rob.front() {
                Some(e) if e.completed && e.done_at.is_some_and(|t| t <= c) => {
                    let e = self.rob.pop_front().expect("front exists");
                    self.rec(e.seq).retire_cycle = Some(c);
                    self.log(c, EventKind::Retire, e.seq);
                }
                _ => break,
            }
        }
    }
}
