use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ChannelError;

/// Additive, non-negative integer jitter applied to each measured attack time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    None,
    /// Uniform on `lo..=hi`.
    Uniform { lo: u64, hi: u64 },
    /// `|N(0, sigma)|`, rounded to the nearest cycle.
    Gaussian { sigma: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), ChannelError> {
        match *self {
            NoiseModel::Uniform { lo, hi } if hi < lo => {
                Err(ChannelError::InvalidNoise(format!("uniform bounds reversed: {lo} > {hi}")))
            }
            NoiseModel::Gaussian { sigma } if !(sigma.is_finite() && sigma >= 0.0) => {
                Err(ChannelError::InvalidNoise(format!("sigma must be finite and >= 0, got {sigma}")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            NoiseModel::None => 0,
            NoiseModel::Uniform { lo, hi } => rng.gen_range(lo..=hi),
            NoiseModel::Gaussian { sigma } => {
                if sigma == 0.0 {
                    return 0;
                }
                let normal = Normal::new(0.0, sigma).expect("validated sigma");
                normal.sample(rng).abs().round() as u64
            }
        }
    }
}

/// Independent stream per (seed, bit index, trial), so results do not depend
/// on the order in which trials are evaluated.
pub fn trial_rng(seed: u64, bit_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((bit_index as u64) << 32) | trial as u64);
    rng
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::None => write!(f, "none"),
            NoiseModel::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            NoiseModel::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
        }
    }
}

impl FromStr for NoiseModel {
    type Err = ChannelError;

    /// `none`, `uniform:LO:HI` or `gaussian:SIGMA`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ChannelError::InvalidNoise(format!("cannot parse `{s}` (none | uniform:LO:HI | gaussian:SIGMA)"));
        let parts: Vec<&str> = s.split(':').collect();
        let model = match parts.as_slice() {
            ["none"] => NoiseModel::None,
            ["uniform", lo, hi] => {
                NoiseModel::Uniform { lo: lo.parse().map_err(|_| bad())?, hi: hi.parse().map_err(|_| bad())? }
            }
            ["gaussian", sigma] => NoiseModel::Gaussian { sigma: sigma.parse().map_err(|_| bad())? },
            _ => return Err(bad()),
        };
        model.validate()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_agree() {
        for text in ["none", "uniform:0:40", "gaussian:2.5"] {
            assert_eq!(text.parse::<NoiseModel>().unwrap().to_string(), text);
        }
        assert!("uniform:5:1".parse::<NoiseModel>().is_err());
        assert!("gaussian:-1".parse::<NoiseModel>().is_err());
        assert!("pink".parse::<NoiseModel>().is_err());
    }

    #[test]
    fn uniform_stays_in_bounds() {
        let noise = NoiseModel::Uniform { lo: 3, hi: 7 };
        let mut rng = trial_rng(1, 0, 0);
        let draws: Vec<u64> = (0..500).map(|_| noise.sample(&mut rng)).collect();
        assert!(draws.iter().all(|d| (3..=7).contains(d)));
        assert!(draws.contains(&3) && draws.contains(&7));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let noise = NoiseModel::Uniform { lo: 0, hi: 1_000_000 };
        let a = noise.sample(&mut trial_rng(9, 1, 2));
        assert_eq!(a, noise.sample(&mut trial_rng(9, 1, 2)));
        assert_ne!(a, noise.sample(&mut trial_rng(9, 2, 1)));
    }

    #[test]
    fn json_shape() {
        let text = serde_json::to_string(&NoiseModel::Uniform { lo: 0, hi: 40 }).unwrap();
        assert_eq!(text, r#"{"kind":"uniform","lo":0,"hi":40}"#);
    }
}
