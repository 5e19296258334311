//! Classify attacks by who they signal to, whether the timed window covers
//! the transient code, and whether anything outlives the squash.

use rewind::analysis::{classify, forward_stateful_fixture};
use rewind::channel::{fig4_scenario, gen_channel_program, ChannelParams, Fig4Variant};
use rewind::model::CoreConfig;
use rewind::sim;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let channel = gen_channel_program(1, &ChannelParams::default())?;
    let trace = sim::run(&channel, &CoreConfig::skylake())?;
    println!("divider channel:  {}", classify(&channel, &trace)?);

    let s = fig4_scenario(Fig4Variant::WaitingVictimBlocking);
    println!("blocking stage:   {}", classify(&s.program, &s.run()?.trace)?);

    let (gadget, trace) = forward_stateful_fixture();
    println!("cache gadget:     {}", classify(&gadget, &trace)?);

    let stripped = channel.without_transients();
    match classify(&stripped, &sim::run(&stripped, &CoreConfig::skylake())?) {
        Ok(t) => println!("no transients:    {t}"),
        Err(e) => println!("no transients:    {e}"),
    }
    Ok(())
}
