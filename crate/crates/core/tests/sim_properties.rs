mod common;

use common::{random_config, random_program};
use proptest::prelude::*;
use rewind::model::{CoreConfig, FuPreset, OpClass};
use rewind::sim::{run, EventKind, Trace};

fn live_at(t: &Trace, c: u64) -> usize {
    t.records
        .iter()
        .filter(|r| {
            r.dispatch_cycle <= c && r.retire_cycle.is_none_or(|x| x >= c) && r.squash_cycle.is_none_or(|x| x > c)
        })
        .count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn record_lifecycles_are_ordered(seed in any::<u64>()) {
        let p = random_program(seed);
        let t = run(&p, &random_config(seed, FuPreset::SkylakeDivsd)).unwrap();
        for r in &t.records {
            if let Some(i) = r.issue_cycle {
                prop_assert!(r.dispatch_cycle < i, "{r:?}");
            }
            if let (Some(i), Some(c)) = (r.issue_cycle, r.complete_cycle) {
                prop_assert!(i <= c, "{r:?}");
            }
            if let Some(ret) = r.retire_cycle {
                prop_assert!(r.complete_cycle.is_some_and(|c| c <= ret), "{r:?}");
            }
            prop_assert!(r.retire_cycle.is_some() != r.squash_cycle.is_some(), "{r:?}");
            prop_assert_eq!(r.transient, r.squash_cycle.is_some());
        }
    }

    #[test]
    fn retirement_follows_program_order(seed in any::<u64>()) {
        let p = random_program(seed);
        let t = run(&p, &random_config(seed, FuPreset::SkylakeDivsd)).unwrap();
        let order = t.retirement_order();
        prop_assert!(order.windows(2).all(|w| w[0] < w[1]));
        let mut by_cycle: Vec<_> = t.retired().map(|r| (r.retire_cycle.unwrap(), r.seq)).collect();
        by_cycle.sort();
        prop_assert!(by_cycle.windows(2).all(|w| w[0].1 < w[1].1));
    }

    #[test]
    fn rob_never_overflows(seed in any::<u64>()) {
        let p = random_program(seed);
        let cfg = random_config(seed, FuPreset::SkylakeDivsd);
        let t = run(&p, &cfg).unwrap();
        for c in 0..=t.total_cycles {
            prop_assert!(live_at(&t, c) <= cfg.rob_size as usize, "cycle {c}");
        }
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        let p = random_program(seed);
        let cfg = random_config(seed, FuPreset::HaswellDivsd);
        prop_assert_eq!(run(&p, &cfg).unwrap(), run(&p, &cfg).unwrap());
    }

    #[test]
    fn squashes_come_from_an_older_resolving_branch(seed in any::<u64>()) {
        let p = random_program(seed);
        let t = run(&p, &random_config(seed, FuPreset::SkylakeDivsd)).unwrap();
        for r in t.transients() {
            let c = r.squash_cycle.unwrap();
            let culprit = t.events.iter().any(|e| {
                e.kind == EventKind::Resolve
                    && e.cycle == c
                    && e.seq < r.seq
                    && t.get(e.seq).is_some_and(|b| b.op == OpClass::Branch)
            });
            prop_assert!(culprit, "{r:?}");
        }
    }

    /// µops fetched from an alternate path (fresh seqs) never dispatch or
    /// issue before a branch has resolved and re-steered to them.
    #[test]
    fn alt_path_never_runs_ahead_of_the_squash(seed in any::<u64>()) {
        let p = random_program(seed);
        let cfg = random_config(seed, FuPreset::SkylakeDivsd);
        let t = run(&p, &cfg).unwrap();
        let first_resolve = t.events.iter().filter(|e| e.kind == EventKind::Resolve).map(|e| e.cycle).min();
        for r in t.records.iter().filter(|r| r.seq as usize >= p.len()) {
            let sq = first_resolve.expect("alt µops imply a resolved branch");
            prop_assert!(r.dispatch_cycle >= sq + cfg.resteer_delay as u64, "{r:?}");
            if let Some(i) = r.issue_cycle {
                prop_assert!(i > sq, "{r:?}");
            }
        }
    }

    #[test]
    fn events_are_sorted(seed in any::<u64>()) {
        let p = random_program(seed);
        let t = run(&p, &random_config(seed, FuPreset::SkylakeDivsd)).unwrap();
        prop_assert!(t.events.windows(2).all(|w| (w[0].cycle, w[0].kind) <= (w[1].cycle, w[1].kind)));
        if let Some(last) = t.events.last() {
            prop_assert_eq!(t.total_cycles, last.cycle);
        }
    }

    /// With every unit fully pipelined, dropping the wrong-path µops leaves
    /// every retired µop's completion cycle unchanged.
    #[test]
    fn pipelined_units_cannot_be_contended(seed in any::<u64>()) {
        let p = random_program(seed);
        let mut cfg = random_config(seed, FuPreset::FullyPipelinedDivsd);
        cfg.policy = rewind::model::SchedulerPolicy::OldestFirstReady;
        let full = run(&p, &cfg).unwrap();
        let stripped = run(&p.without_transients(), &cfg).unwrap();
        let completes = |t: &Trace| t.retired().map(|r| (r.op, r.complete_cycle)).collect::<Vec<_>>();
        prop_assert_eq!(completes(&full), completes(&stripped));
    }
}

#[test]
fn empty_program_gives_an_empty_trace() {
    let p = rewind::model::build_program("empty", &[]).unwrap();
    let t = run(&p, &CoreConfig::skylake()).unwrap();
    assert!(t.records.is_empty());
    assert_eq!(t.total_cycles, 0);
}
