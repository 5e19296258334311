//! Three dependent divisions, a branch on the last one that mispredicts, and
//! two transient divisions that steal the divider's blocking stage.
//!
//! ```bash
//! cargo run --example appendix_golden
//! ```

use rewind::channel::appendix_scenario;
use rewind::sim::render_diagram;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = appendix_scenario();
    let outcome = scenario.run()?;

    println!("without attacker:\n{}", render_diagram(&outcome.baseline, 40));
    println!("with attacker:\n{}", render_diagram(&outcome.trace, 40));

    println!(
        "attack time {} -> {} cycles ({:+})",
        outcome.baseline.attack_time.unwrap(),
        outcome.trace.attack_time.unwrap(),
        outcome.delta
    );
    for (victim, delay) in scenario.victims.iter().zip(&outcome.victim_delays) {
        println!("victim µop {victim}: issue delayed {delay} cycles");
    }
    Ok(())
}
