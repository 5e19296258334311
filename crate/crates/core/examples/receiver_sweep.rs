//! Longer receiver chains give the senders more time to contend: the timing
//! gap grows while the bit rate falls.

use rewind::analysis::{is_non_decreasing, is_non_increasing, sweep_receiver_length};
use rewind::channel::{ChannelParams, NoiseModel};
use rewind::model::CoreConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lengths = [3, 6, 9, 12, 15, 24, 48, 72];
    let params = ChannelParams::default().with_trials(200);
    let rows = sweep_receiver_length(&lengths, &params, &CoreConfig::skylake(), &NoiseModel::None, 1)?;

    println!("{:>6} {:>8} {:>8} {:>5} {:>10}", "n_divs", "bit 0", "bit 1", "diff", "KB/s");
    for r in &rows {
        println!("{:>6} {:>8} {:>8} {:>5} {:>10.1}", r.n_divs, r.median0, r.median1, r.diff, r.kbps);
    }
    let diffs: Vec<i64> = rows.iter().map(|r| r.diff).collect();
    let rates: Vec<f64> = rows.iter().map(|r| r.bits_per_cycle).collect();
    println!("diff non-decreasing: {}", is_non_decreasing(&diffs));
    println!("rate non-increasing: {}", is_non_increasing(&rates));
    Ok(())
}
