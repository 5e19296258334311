//! Channel gap per divider preset over a range of receiver lengths.
//!
//! The Haswell-like divider (8 blocking + 8 pipelined) has a latency of
//! exactly twice its issue interval. A sender slipping in between two
//! receivers then leaves the blocking stage just as the next receiver
//! becomes ready, so the gap mostly stays at zero.

use rewind::channel::{measure_bits, ChannelParams};
use rewind::model::{CoreConfig, FuPreset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let presets = [FuPreset::SkylakeDivsd, FuPreset::HaswellDivsd, FuPreset::FullyPipelinedDivsd];
    print!("{:>6}", "n_divs");
    for p in presets {
        print!(" {:>22}", p.name());
    }
    println!();
    for n in [3, 6, 9, 12, 24, 48] {
        print!("{n:>6}");
        for p in presets {
            let params = ChannelParams::default().with_recv_divs(n).with_preset(p);
            let (t0, t1) = measure_bits(&params, &CoreConfig::skylake())?;
            print!(" {:>22}", format!("{t0} -> {t1}"));
        }
        println!();
    }
    Ok(())
}
