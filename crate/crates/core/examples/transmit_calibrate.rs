//! Send a secret through the divider channel, calibrate a threshold from the
//! samples and decode.
//!
//! ```bash
//! cargo run --example transmit_calibrate -- uniform:0:40
//! ```

use rewind::analysis::{calibrate, histogram, rates, samples_for, DEFAULT_CLOCK_HZ};
use rewind::channel::{measure_bits, transmit, ChannelParams, NoiseModel};
use rewind::model::CoreConfig;

fn bar_chart(samples: &[u64], width: u64) -> Result<(), Box<dyn std::error::Error>> {
    for (start, p) in histogram(samples, width)? {
        println!("  {start:>5} | {}", "#".repeat((p * 60.0).round() as usize));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let noise: NoiseModel = std::env::args().nth(1).as_deref().unwrap_or("gaussian:4").parse()?;
    let params = ChannelParams::default().with_bits("0110100111".parse()?).with_trials(2000);
    let core = CoreConfig::skylake();

    let (t0, t1) = measure_bits(&params, &core)?;
    println!("noiseless attack time: bit 0 = {t0}, bit 1 = {t1} cycles");

    let samples = transmit(&params, &core, &noise, 42)?;
    let (zeros, ones) = (samples_for(&samples, 0), samples_for(&samples, 1));
    let threshold = calibrate(&zeros, &ones)?;
    let stats = rates(&samples, threshold, DEFAULT_CLOCK_HZ);

    println!("noise {noise}: threshold {threshold}, error rate {:.4}", stats.error_rate);
    println!(
        "{:.6} bits/cycle, {:.1} KB/s at a nominal 3 GHz",
        stats.transfer_rate_bits_per_cycle, stats.transfer_rate_kbps
    );
    println!("bit 0:");
    bar_chart(&zeros, 4)?;
    println!("bit 1:");
    bar_chart(&ones, 4)?;
    Ok(())
}
