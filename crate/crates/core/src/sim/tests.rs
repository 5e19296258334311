//! Engine behaviour pinned against hand-stepped timelines.

use std::collections::BTreeSet;

use crate::model::{
    build_program, CoreConfig, Cycle, FunctionalUnitSpec, OpClass, OpSpec, PortSpec, Program, SchedulerPolicy,
    StageSpec,
};

use super::*;

fn timer_start() -> OpSpec {
    OpSpec::new(OpClass::TimerStart)
}

fn timer_stop() -> OpSpec {
    OpSpec::new(OpClass::TimerStop)
}

/// Three dependent divisions, a mispredicted branch on the last one, two
/// transient ops, and a timer pair around it all.
fn appendix_like(attacker: bool) -> Program {
    let transient = if attacker { OpSpec::div() } else { OpSpec::alu() };
    build_program(
        "appendix-like",
        &[
            timer_start(),
            OpSpec::div(),
            OpSpec::div().after([1]),
            OpSpec::div().after([2]),
            OpSpec::branch(true, false, vec![timer_stop()]).after([3]),
            transient.clone(),
            transient,
        ],
    )
    .unwrap()
}

fn issue(t: &Trace, seq: u32) -> Cycle {
    t.get(seq).unwrap().issue_cycle.unwrap()
}

#[test]
fn empty_program() {
    let p = build_program("empty", &[]).unwrap();
    let t = run(&p, &CoreConfig::skylake()).unwrap();
    assert!(t.records.is_empty());
    assert_eq!(t.total_cycles, 0);
    assert_eq!(t.attack_time, None);
}

#[test]
fn single_division_latency() {
    let p = build_program("one", &[OpSpec::div()]).unwrap();
    let t = run(&p, &CoreConfig::skylake()).unwrap();
    let r = t.get(0).unwrap();
    assert_eq!(r.dispatch_cycle, 0);
    assert_eq!(r.issue_cycle, Some(1));
    assert_eq!(r.complete_cycle.unwrap() - r.issue_cycle.unwrap(), 13);
    assert_eq!(r.retire_cycle, r.complete_cycle);
}

#[test]
fn dependent_chain_issues_every_latency() {
    let p = build_program("chain", &[OpSpec::div(), OpSpec::div().after([0]), OpSpec::div().after([1])]).unwrap();
    let t = run(&p, &CoreConfig::skylake()).unwrap();
    assert_eq!([issue(&t, 0), issue(&t, 1), issue(&t, 2)], [1, 14, 27]);
}

#[test]
fn independent_divisions_respect_initiation_interval() {
    let p = build_program("burst", &[OpSpec::div(), OpSpec::div(), OpSpec::div()]).unwrap();
    let t = run(&p, &CoreConfig::skylake()).unwrap();
    assert_eq!([issue(&t, 0), issue(&t, 1), issue(&t, 2)], [1, 5, 9]);
}

#[test]
fn appendix_timeline_without_attacker() {
    let t = run(&appendix_like(false), &CoreConfig::appendix()).unwrap();
    // timer start: issue 1, complete/retire 2; victims issue every 4 cycles.
    assert_eq!(t.get(0).unwrap().retire_cycle, Some(2));
    assert_eq!([issue(&t, 1), issue(&t, 2), issue(&t, 3)], [2, 6, 10]);
    // branch issues 14, resolves 15; stop dispatched 16, issues 17, retires 18.
    assert_eq!(issue(&t, 4), 14);
    let stop = t.timer(OpClass::TimerStop).unwrap();
    assert_eq!((stop.dispatch_cycle, stop.retire_cycle), (16, Some(18)));
    assert_eq!(t.attack_time, Some(16));
}

#[test]
fn appendix_timeline_with_attacker() {
    let t = run(&appendix_like(true), &CoreConfig::appendix()).unwrap();
    // attackers slip into stage 1 whenever the next victim is still waiting.
    assert_eq!([issue(&t, 5), issue(&t, 6)], [5, 11]);
    assert_eq!([issue(&t, 1), issue(&t, 2), issue(&t, 3)], [2, 8, 14]);
    let v0_done = t.get(1).unwrap().complete_cycle.unwrap();
    assert_eq!(issue(&t, 2) - v0_done, 2);
    assert_eq!(t.attack_time, Some(20));
    assert!(t.get(5).unwrap().transient && t.get(6).unwrap().transient);
}

#[test]
fn squash_set_is_everything_younger_in_flight() {
    let mut specs = vec![OpSpec::div()];
    specs.extend((1..5).map(|_| OpSpec::new(OpClass::Nop)));
    specs.push(OpSpec::branch(true, false, vec![]).after([0]));
    specs.extend((6..10).map(|_| OpSpec::alu()));
    let p = build_program("sq", &specs).unwrap();
    let cfg = CoreConfig::skylake();
    let mut sim = Simulator::new(&p, &cfg).unwrap();
    for _ in 0..3 {
        sim.step().unwrap();
    }
    assert_eq!(sim.in_flight().len(), 10);
    assert_eq!(sim.squash_set(5).unwrap(), BTreeSet::from([6, 7, 8, 9]));
    assert!(matches!(sim.squash_set(3), Err(SimError::NotMispredicted { seq: 3 })));
    assert!(matches!(sim.squash_set(42), Err(SimError::NotInFlight { seq: 42 })));
}

#[test]
fn squash_set_empty_when_nothing_younger() {
    let p = build_program("tail", &[OpSpec::div(), OpSpec::branch(true, false, vec![]).after([0])]).unwrap();
    let cfg = CoreConfig::skylake();
    let mut sim = Simulator::new(&p, &cfg).unwrap();
    sim.step().unwrap();
    assert!(sim.squash_set(1).unwrap().is_empty());
}

#[test]
fn nested_mispredictions() {
    // outer branch 5 waits on a division; inner branch 8 resolves quickly.
    let p = build_program(
        "nested",
        &[
            OpSpec::div(),
            OpSpec::new(OpClass::Nop),
            OpSpec::new(OpClass::Nop),
            OpSpec::new(OpClass::Nop),
            OpSpec::new(OpClass::Nop),
            OpSpec::branch(true, false, vec![OpSpec::new(OpClass::Nop)]).after([0]),
            OpSpec::alu(),
            OpSpec::alu(),
            OpSpec::branch(false, true, vec![OpSpec::alu(), OpSpec::alu().after([9])]).after([7]),
            OpSpec::alu(),
            OpSpec::alu(),
            OpSpec::alu(),
        ],
    )
    .unwrap();
    let t = run(&p, &CoreConfig::skylake()).unwrap();
    let inner = t.events.iter().find(|e| e.kind == EventKind::Resolve && e.seq == 8).unwrap().cycle;
    let outer = t.events.iter().find(|e| e.kind == EventKind::Resolve && e.seq == 5).unwrap().cycle;
    assert!(inner < outer);
    let squashed_at =
        |c: Cycle| -> BTreeSet<u32> { t.records.iter().filter(|r| r.squash_cycle == Some(c)).map(|r| r.seq).collect() };
    assert_eq!(squashed_at(inner), BTreeSet::from([9, 10, 11]));
    // the inner re-steer got fresh seqs 12, 13; the outer squash takes them too.
    assert_eq!(squashed_at(outer), BTreeSet::from([6, 7, 8, 12, 13]));
    let alt = t.get(13).unwrap();
    assert!(alt.issue_cycle.unwrap() > t.get(12).unwrap().issue_cycle.unwrap());
    assert!(t.get(14).unwrap().retire_cycle.is_some());
    assert_eq!(t.retirement_order(), vec![0, 1, 2, 3, 4, 5, 14]);
}

#[test]
fn squashed_uop_frees_blocking_stage_next_cycle() {
    let cfg = CoreConfig {
        rob_size: 16,
        scheduler_size: 16,
        dispatch_width: 4,
        retire_width: 4,
        ports: vec![PortSpec::new(0, ["fp_div"]), PortSpec::new(1, ["fp_mul"])],
        fus: vec![
            FunctionalUnitSpec::new("fp_div", vec![StageSpec::blocking(10), StageSpec::pipelined(1)]),
            FunctionalUnitSpec::new("fp_mul", vec![StageSpec::pipelined(4)]),
        ],
        policy: SchedulerPolicy::OldestFirstReady,
        resteer_delay: 0,
    };
    let p = build_program(
        "free",
        &[OpSpec::new(OpClass::FpMul), OpSpec::branch(true, false, vec![OpSpec::div()]).after([0]), OpSpec::div()],
    )
    .unwrap();
    let t = run(&p, &cfg).unwrap();
    // transient division holds stage 1 from cycle 1; branch resolves at 6.
    assert_eq!(issue(&t, 2), 1);
    assert_eq!(t.get(2).unwrap().squash_cycle, Some(6));
    let alt = t.get(3).unwrap();
    assert_eq!(alt.dispatch_cycle, 6);
    assert_eq!(alt.issue_cycle, Some(7));
}

#[test]
fn oldest_ready_wins_the_port() {
    let p = build_program("age", &[OpSpec::div(), OpSpec::div()]).unwrap();
    let t = run(&p, &CoreConfig::appendix()).unwrap();
    assert!(issue(&t, 0) < issue(&t, 1));
}

#[test]
fn strict_in_order_blocks_younger_independent_work() {
    let p = build_program("strict", &[OpSpec::div(), OpSpec::div().after([0]), OpSpec::alu()]).unwrap();
    let ooo = run(&p, &CoreConfig::appendix()).unwrap();
    assert_eq!(issue(&ooo, 2), 1);
    let strict = run(&p, &CoreConfig::appendix().with_policy(SchedulerPolicy::StrictInOrder)).unwrap();
    assert_eq!(issue(&strict, 2), issue(&strict, 1));
}

#[test]
fn scheduler_overflow_waits_in_rob() {
    let mut cfg = CoreConfig::appendix();
    cfg.scheduler_size = 1;
    let p = build_program("sched", &[OpSpec::div(), OpSpec::alu()]).unwrap();
    let t = run(&p, &cfg).unwrap();
    // the ALU op is ready at cycle 1 but only enters the scheduler after the
    // division issues and frees the single slot.
    assert_eq!(issue(&t, 0), 1);
    assert_eq!(issue(&t, 1), 2);
}

#[test]
fn rob_occupancy_never_exceeds_capacity() {
    let mut specs = vec![OpSpec::div()];
    specs.extend((0..20).map(|_| OpSpec::alu()));
    let p = build_program("rob", &specs).unwrap();
    let cfg = CoreConfig::appendix().with_rob_size(5);
    let t = run(&p, &cfg).unwrap();
    for c in 0..=t.total_cycles {
        let live = t
            .records
            .iter()
            .filter(|r| {
                r.dispatch_cycle <= c && r.retire_cycle.is_none_or(|x| x >= c) && r.squash_cycle.is_none_or(|x| x > c)
            })
            .count();
        assert!(live <= 5, "cycle {c}: {live}");
    }
}

#[test]
fn unknown_unit_is_a_config_error() {
    let p = build_program("x", &[OpSpec::div().on_unit("vector")]).unwrap();
    assert!(matches!(run(&p, &CoreConfig::skylake()), Err(SimError::UnknownUnit { seq: 0, .. })));
}

#[test]
fn unreachable_unit_is_a_config_error() {
    let mut cfg = CoreConfig::appendix();
    cfg.ports.retain(|p| !p.fu_kinds.contains("load"));
    let p = build_program("x", &[OpSpec::new(OpClass::Load)]).unwrap();
    assert!(matches!(run(&p, &cfg), Err(SimError::UnreachableUnit { .. })));
}

#[test]
fn cycle_limit_guard() {
    let p = build_program("chain", &[OpSpec::div(), OpSpec::div().after([0])]).unwrap();
    assert_eq!(run_with_limit(&p, &CoreConfig::skylake(), 10), Err(SimError::CycleLimit(10)));
}

#[test]
fn events_are_ordered() {
    let t = run(&appendix_like(true), &CoreConfig::appendix()).unwrap();
    assert!(t.events.windows(2).all(|w| (w[0].cycle, w[0].kind) <= (w[1].cycle, w[1].kind)));
    assert_eq!(t.total_cycles, t.events.last().unwrap().cycle);
}

#[test]
fn timers_serialize() {
    let p = build_program("fence", &[OpSpec::div(), timer_start(), OpSpec::alu()]).unwrap();
    let t = run(&p, &CoreConfig::appendix()).unwrap();
    let div_done = t.get(0).unwrap().complete_cycle.unwrap();
    assert_eq!(issue(&t, 1), div_done);
    assert_eq!(issue(&t, 2), div_done + 1);
}
