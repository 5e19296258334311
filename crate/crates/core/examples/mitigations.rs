//! Three ways the channel disappears: in-order issue, a fully pipelined
//! divider, and a ROB too small to hold the receivers and the senders.

use rewind::channel::{measure_bits, ChannelParams};
use rewind::model::{CoreConfig, FuPreset, SchedulerPolicy};

fn gap(params: &ChannelParams, core: &CoreConfig) -> Result<i64, Box<dyn std::error::Error>> {
    let (t0, t1) = measure_bits(params, core)?;
    Ok(t1 as i64 - t0 as i64)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let skylake = CoreConfig::skylake();
    println!(
        "{:>6} {:>9} {:>16} {:>16} {:>12}",
        "n_divs", "baseline", "strict-in-order", "fully pipelined", "small ROB"
    );
    for n in [3, 6, 9, 12, 15, 24] {
        let params = ChannelParams::default().with_recv_divs(n);
        let baseline = gap(&params, &skylake)?;
        let in_order = gap(&params, &skylake.clone().with_policy(SchedulerPolicy::StrictInOrder))?;
        let pipelined = gap(&params.clone().with_preset(FuPreset::FullyPipelinedDivsd), &skylake)?;
        // One entry short of holding the receivers, branches, load and a sender.
        let rob = params.attack_footprint() - 1;
        let small_rob = gap(&params, &skylake.clone().with_rob_size(rob))?;
        println!("{n:>6} {baseline:>9} {in_order:>16} {pipelined:>16} {small_rob:>12}");
    }
    Ok(())
}
