use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::channel::{transmit, ChannelParams, NoiseModel};
use crate::model::{CoreConfig, Cycle};

use super::{calibrate_samples, rates, AnalysisError, DEFAULT_CLOCK_HZ};

/// One receiver length of a sensitivity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_divs: u32,
    pub median0: Cycle,
    pub median1: Cycle,
    /// `median1 - median0`.
    pub diff: i64,
    pub bits_per_cycle: f64,
    pub kbps: f64,
    pub error_rate: f64,
}

/// Transmits `params.secret_bits` once per receiver length and calibrates
/// each row on its own samples. Sender count is re-derived per length unless
/// `params` fixes it.
pub fn sweep_receiver_length(
    lengths: &[u32],
    params: &ChannelParams,
    config: &CoreConfig,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<SweepRow>, AnalysisError> {
    if lengths.is_empty() {
        return Err(AnalysisError::Empty("sweep length"));
    }
    lengths
        .iter()
        .map(|&n| {
            let p = params.clone().with_recv_divs(n);
            let samples = transmit(&p, config, noise, seed)?;
            let threshold = calibrate_samples(&samples)?;
            let stats = rates(&samples, threshold, DEFAULT_CLOCK_HZ);
            let (median0, median1) = (stats.median0.unwrap_or(0), stats.median1.unwrap_or(0));
            Ok(SweepRow {
                n_divs: n,
                median0,
                median1,
                diff: median1 as i64 - median0 as i64,
                bits_per_cycle: stats.transfer_rate_bits_per_cycle,
                kbps: stats.transfer_rate_kbps,
                error_rate: stats.error_rate,
            })
        })
        .collect()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("n_divs,median0,median1,diff,bits_per_cycle,kbps,error_rate\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n_divs, r.median0, r.median1, r.diff, r.bits_per_cycle, r.kbps, r.error_rate
        );
    }
    out
}

pub fn is_non_decreasing<T: PartialOrd>(values: &[T]) -> bool {
    values.windows(2).all(|w| w[0] <= w[1])
}

pub fn is_non_increasing<T: PartialOrd>(values: &[T]) -> bool {
    values.windows(2).all(|w| w[0] >= w[1])
}
