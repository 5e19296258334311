//! Experiment programs and the bit transmission driver.

mod noise;
mod params;
mod programs;

pub use noise::{trial_rng, NoiseModel};
pub use params::{ChannelParams, SecretBits, SENDER_MARGIN};
pub use programs::{
    appendix_scenario, fig4_scenario, gen_appendix_example, gen_channel_program, gen_fig4_scenario, measure_bits,
    ChannelLayout, Fig4Variant, Scenario, ScenarioOutcome,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CoreConfig, Cycle, ModelError};
use crate::sim::{self, SimError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid channel parameters: {0}")]
    InvalidParams(String),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("program produced no start/stop timing")]
    NoMeasurement,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Timing samples for one transmitted bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitSamples {
    pub bit: u8,
    pub samples: Vec<Cycle>,
}

/// Sends every bit of `params.secret_bits`, `trials_per_bit` times each.
///
/// The simulator is deterministic, so each bit value is simulated once and
/// every trial reuses that attack time plus its own noise draw.
pub fn transmit(
    params: &ChannelParams,
    config: &CoreConfig,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<BitSamples>, ChannelError> {
    params.validate()?;
    noise.validate()?;
    let config = config.clone().with_fu(params.fu_preset.spec());
    let mut base: [Option<Cycle>; 2] = [None, None];
    let mut out = Vec::with_capacity(params.secret_bits.len());
    for (index, &bit) in params.secret_bits.bits().iter().enumerate() {
        let time = match base[bit as usize] {
            Some(t) => t,
            None => {
                let trace = sim::run(&gen_channel_program(bit, params)?, &config)?;
                let t = trace.attack_time.ok_or(ChannelError::NoMeasurement)?;
                base[bit as usize] = Some(t);
                t
            }
        };
        let samples = (0..params.trials_per_bit as usize)
            .map(|trial| time + noise.sample(&mut trial_rng(seed, index, trial)))
            .collect();
        out.push(BitSamples { bit, samples });
    }
    Ok(out)
}

/// CSV with columns `bit_index,bit,trial,cycles`.
pub fn samples_to_csv(samples: &[BitSamples]) -> String {
    let mut out = String::from("bit_index,bit,trial,cycles\n");
    for (index, bs) in samples.iter().enumerate() {
        for (trial, cycles) in bs.samples.iter().enumerate() {
            let _ = writeln!(out, "{index},{},{trial},{cycles}", bs.bit);
        }
    }
    out
}
