//! When can a younger transient µop slow down an older one?
//!
//! - (a) victim ready first on a pipelined unit: oldest-first wins, no delay.
//! - (b) attacker ready first on a pipelined unit: the victim enters one
//!   cycle behind it, no delay.
//! - (c) attacker ready first on a unit with a blocking stage: the victim
//!   waits out the whole blocking stage.

use rewind::channel::{fig4_scenario, Fig4Variant};
use rewind::sim::render_diagram;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for variant in Fig4Variant::ALL {
        let scenario = fig4_scenario(variant);
        let out = scenario.run()?;
        println!("--- fig4{variant}: delta {:+} cycles, victim issue delay {:?}", out.delta, out.victim_delays);
        print!("{}", render_diagram(&out.trace, 40));
        println!();
    }
    Ok(())
}
