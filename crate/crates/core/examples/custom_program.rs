//! Build a program by hand, step the simulator cycle by cycle, and look at a
//! branch's squash set while it is still in flight.

use rewind::model::{build_program, CoreConfig, FuPreset, OpClass, OpSpec, Program};
use rewind::sim::{render_diagram, Simulator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A multiply feeding a branch that guesses wrong; the wrong path issues
    // two multiplies and an ALU op, the right path times one more multiply.
    let program = build_program(
        "hand-built",
        &[
            OpSpec::new(OpClass::FpMul),
            OpSpec::branch(
                true,
                false,
                vec![OpSpec::new(OpClass::TimerStart), OpSpec::new(OpClass::FpMul), OpSpec::new(OpClass::TimerStop)],
            )
            .after([0]),
            OpSpec::new(OpClass::FpMul),
            OpSpec::new(OpClass::FpMul).after([2]),
            OpSpec::alu().after([3]),
        ],
    )?;

    // JSON is the interchange format for programs.
    let program = Program::from_json(&program.to_json())?;

    let config = CoreConfig::appendix().with_fu(FuPreset::FpMul.spec());
    let mut sim = Simulator::new(&program, &config)?;
    while sim.step()? {
        if let Ok(set) = sim.squash_set(1) {
            if !set.is_empty() {
                println!("cycle {}: branch 1 would squash {:?}", sim.cycle(), set);
            }
        }
    }
    let trace = sim.into_trace();
    print!("{}", render_diagram(&trace, 40));
    println!("timed section: {:?} cycles", trace.attack_time);
    print!("{}", trace.to_csv());
    Ok(())
}
