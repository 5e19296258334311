#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rewind::model::{build_program, CoreConfig, FuPreset, OpClass, OpSpec, Program, SchedulerPolicy, Seq};

const CLASSES: [OpClass; 4] = [OpClass::FpDiv, OpClass::FpMul, OpClass::IntAlu, OpClass::Load];

fn stream(rng: &mut ChaCha8Rng, first: Seq, len: usize, depth: u32) -> Vec<OpSpec> {
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let seq = first + i as Seq;
        let mut deps = Vec::new();
        if seq > 0 {
            for _ in 0..rng.gen_range(0..=2) {
                deps.push(rng.gen_range(0..seq));
            }
        }
        let spec = if depth < 2 && rng.gen_bool(0.15) {
            let alt_len = rng.gen_range(0..=5);
            let alt = stream(rng, seq + 1, alt_len, depth + 1);
            OpSpec::branch(rng.gen_bool(0.5), rng.gen_bool(0.5), alt)
        } else {
            OpSpec::new(CLASSES[rng.gen_range(0..CLASSES.len())])
        };
        out.push(spec.after(deps));
    }
    out
}

/// A valid program of up to 24 top-level µops with random data deps and
/// branches (nested at most two deep).
pub fn random_program(seed: u64) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = rng.gen_range(1..=24);
    let specs = stream(&mut rng, 0, len, 0);
    build_program(format!("random-{seed}"), &specs).expect("generated program is valid")
}

/// Skylake-shaped core with a random ROB, scheduler, widths and policy.
pub fn random_config(seed: u64, divider: FuPreset) -> CoreConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut c = CoreConfig::skylake().with_fu(divider.spec()).with_rob_size(rng.gen_range(2..=64));
    c.scheduler_size = rng.gen_range(1..=c.rob_size);
    c.dispatch_width = rng.gen_range(1..=4);
    c.retire_width = rng.gen_range(1..=4);
    c.resteer_delay = rng.gen_range(0..=3);
    if rng.gen_bool(0.3) {
        c.policy = SchedulerPolicy::StrictInOrder;
    }
    c
}
