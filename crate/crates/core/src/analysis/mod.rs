//! Threshold calibration, error and transfer rates, histograms, receiver
//! length sweeps and attack taxonomy.

mod sweep;
mod taxonomy;

pub use sweep::{is_non_decreasing, is_non_increasing, sweep_receiver_length, sweep_to_csv, SweepRow};
pub use taxonomy::{classify, forward_stateful_fixture, ChannelKind, Direction, Taxonomy, Timing};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{BitSamples, ChannelError};
use crate::model::Cycle;

/// Nominal clock used for KB/s reporting.
pub const DEFAULT_CLOCK_HZ: f64 = 3.0e9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("{0} samples are empty")]
    Empty(&'static str),
    #[error("bin width must be at least 1")]
    ZeroBinWidth,
    #[error("unclassifiable: {0}")]
    Unclassifiable(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Nearest-rank percentile of an ascending slice, `pct` in 1..=100.
pub fn percentile(sorted: &[Cycle], pct: u32) -> Cycle {
    assert!(!sorted.is_empty() && (1..=100).contains(&pct));
    let n = sorted.len();
    let rank = (pct as usize * n).div_ceil(100).max(1);
    sorted[rank - 1]
}

fn sorted(samples: &[Cycle]) -> Vec<Cycle> {
    let mut v = samples.to_vec();
    v.sort_unstable();
    v
}

/// Summary percentiles used by the threshold rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Percentiles {
    pub median0: Cycle,
    pub median1: Cycle,
    pub p99_0: Cycle,
    pub p1_1: Cycle,
}

impl Percentiles {
    pub fn of(samples0: &[Cycle], samples1: &[Cycle]) -> Result<Self, AnalysisError> {
        if samples0.is_empty() {
            return Err(AnalysisError::Empty("bit-0"));
        }
        if samples1.is_empty() {
            return Err(AnalysisError::Empty("bit-1"));
        }
        let (s0, s1) = (sorted(samples0), sorted(samples1));
        Ok(Percentiles {
            median0: percentile(&s0, 50),
            median1: percentile(&s1, 50),
            p99_0: percentile(&s0, 99),
            p1_1: percentile(&s1, 1),
        })
    }

    /// Midpoint of the gap between the slow tail of 0s and the fast tail of
    /// 1s when there is one, the midpoint of the medians otherwise.
    pub fn threshold(&self) -> f64 {
        if self.p99_0 < self.p1_1 {
            (self.p99_0 + self.p1_1) as f64 / 2.0
        } else {
            (self.median0 + self.median1) as f64 / 2.0
        }
    }
}

/// Decision threshold: a sample at or below it decodes as 0.
pub fn calibrate(samples0: &[Cycle], samples1: &[Cycle]) -> Result<f64, AnalysisError> {
    Ok(Percentiles::of(samples0, samples1)?.threshold())
}

/// All samples of one bit value, across every transmitted bit.
pub fn samples_for(bit_samples: &[BitSamples], bit: u8) -> Vec<Cycle> {
    bit_samples.iter().filter(|b| b.bit == bit).flat_map(|b| b.samples.iter().copied()).collect()
}

/// Calibrates from the transmitted samples themselves.
pub fn calibrate_samples(bit_samples: &[BitSamples]) -> Result<f64, AnalysisError> {
    calibrate(&samples_for(bit_samples, 0), &samples_for(bit_samples, 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub threshold: f64,
    pub error_rate: f64,
    pub errors: u64,
    /// One bit per trial.
    pub total_bits: u64,
    pub total_cycles: u64,
    pub transfer_rate_bits_per_cycle: f64,
    pub clock_hz: f64,
    pub transfer_rate_kbps: f64,
    pub median0: Option<Cycle>,
    pub median1: Option<Cycle>,
    pub p99_0: Option<Cycle>,
    pub p1_1: Option<Cycle>,
}

pub fn decode(sample: Cycle, threshold: f64) -> u8 {
    u8::from(sample as f64 > threshold)
}

/// Error and transfer rate of `bit_samples` decoded against `threshold`.
pub fn rates(bit_samples: &[BitSamples], threshold: f64, clock_hz: f64) -> ChannelStats {
    let mut errors = 0u64;
    let mut total_bits = 0u64;
    let mut total_cycles = 0u64;
    for bs in bit_samples {
        for &s in &bs.samples {
            total_bits += 1;
            total_cycles += s;
            if decode(s, threshold) != bs.bit {
                errors += 1;
            }
        }
    }
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let bpc = ratio(total_bits, total_cycles);
    let (s0, s1) = (sorted(&samples_for(bit_samples, 0)), sorted(&samples_for(bit_samples, 1)));
    let pick = |s: &[Cycle], pct| (!s.is_empty()).then(|| percentile(s, pct));
    ChannelStats {
        threshold,
        error_rate: ratio(errors, total_bits),
        errors,
        total_bits,
        total_cycles,
        transfer_rate_bits_per_cycle: bpc,
        clock_hz,
        transfer_rate_kbps: bpc * clock_hz / 8192.0,
        median0: pick(&s0, 50),
        median1: pick(&s1, 50),
        p99_0: pick(&s0, 99),
        p1_1: pick(&s1, 1),
    }
}

fn opt(v: Option<Cycle>) -> String {
    v.map(|c| c.to_string()).unwrap_or_default()
}

/// Single-row CSV; `kbps` is at the nominal `clock_hz`.
pub fn stats_to_csv(stats: &ChannelStats) -> String {
    format!(
        "threshold,error_rate,errors,total_bits,total_cycles,bits_per_cycle,clock_hz,kbps,median0,median1,p99_0,p1_1\n\
         {},{},{},{},{},{},{},{},{},{},{},{}\n",
        stats.threshold,
        stats.error_rate,
        stats.errors,
        stats.total_bits,
        stats.total_cycles,
        stats.transfer_rate_bits_per_cycle,
        stats.clock_hz,
        stats.transfer_rate_kbps,
        opt(stats.median0),
        opt(stats.median1),
        opt(stats.p99_0),
        opt(stats.p1_1),
    )
}

/// Probability per bin. Bins start at the smallest sample and are contiguous
/// up to the largest, empty ones included.
pub fn histogram(samples: &[Cycle], bin_width: Cycle) -> Result<Vec<(Cycle, f64)>, AnalysisError> {
    if bin_width == 0 {
        return Err(AnalysisError::ZeroBinWidth);
    }
    let (&min, &max) = match (samples.iter().min(), samples.iter().max()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(AnalysisError::Empty("histogram")),
    };
    let mut counts = vec![0u64; ((max - min) / bin_width + 1) as usize];
    for &s in samples {
        counts[((s - min) / bin_width) as usize] += 1;
    }
    let n = samples.len() as f64;
    Ok(counts.iter().enumerate().map(|(i, &c)| (min + i as Cycle * bin_width, c as f64 / n)).collect())
}

pub fn histogram_to_csv(bins: &[(Cycle, f64)]) -> String {
    let mut out = String::from("bin_start,probability\n");
    for (start, p) in bins {
        let _ = writeln!(out, "{start},{p}");
    }
    out
}
