use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::model::FuPreset;

use super::ChannelError;

/// Extra sender divisions beyond what the receiver window can absorb.
pub const SENDER_MARGIN: u32 = 4;

/// A bit string, written as `"0101..."` in JSON and on the command line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SecretBits(Vec<u8>);

impl SecretBits {
    pub fn new(bits: Vec<u8>) -> Result<Self, ChannelError> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(ChannelError::InvalidParams(format!("bit value {b} is not 0 or 1")));
        }
        Ok(SecretBits(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for SecretBits {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(ChannelError::InvalidParams(format!("`{other}` is not a bit"))),
            })
            .collect::<Result<Vec<u8>, _>>()
            .map(SecretBits)
    }
}

impl fmt::Display for SecretBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|b| write!(f, "{b}"))
    }
}

impl Serialize for SecretBits {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SecretBits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Missing JSON fields take their default values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub n_recv_divs: u32,
    /// `None` sizes the sender burst to cover the receiver window.
    pub n_send_divs: Option<u32>,
    pub fu_preset: FuPreset,
    pub secret_bits: SecretBits,
    pub trials_per_bit: u32,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            n_recv_divs: 12,
            n_send_divs: None,
            fu_preset: FuPreset::SkylakeDivsd,
            secret_bits: SecretBits(vec![0, 1]),
            trials_per_bit: 1000,
        }
    }
}

impl ChannelParams {
    pub fn with_recv_divs(mut self, n: u32) -> Self {
        self.n_recv_divs = n;
        self
    }

    pub fn with_preset(mut self, preset: FuPreset) -> Self {
        self.fu_preset = preset;
        self
    }

    pub fn with_bits(mut self, bits: SecretBits) -> Self {
        self.secret_bits = bits;
        self
    }

    pub fn with_trials(mut self, trials: u32) -> Self {
        self.trials_per_bit = trials;
        self
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.n_recv_divs == 0 {
            return Err(ChannelError::InvalidParams("n_recv_divs must be at least 1".into()));
        }
        if self.trials_per_bit == 0 {
            return Err(ChannelError::InvalidParams("trials_per_bit must be at least 1".into()));
        }
        Ok(())
    }

    /// Sender divisions actually generated.
    ///
    /// Defaults to enough back-to-back issues to keep the divider busy for
    /// the whole uncontended receiver chain, plus a small margin.
    pub fn sender_count(&self) -> u32 {
        self.n_send_divs.unwrap_or_else(|| {
            let fu = self.fu_preset.spec();
            let window = self.n_recv_divs * fu.total_latency();
            window.div_ceil(fu.initiation_interval()) + SENDER_MARGIN
        })
    }

    /// ROB entries for the whole receiver chain, both branches, the secret
    /// load and one sender at once. With a smaller ROB a sender only enters
    /// after receivers have retired, too late to delay the rest of the chain.
    pub fn attack_footprint(&self) -> u32 {
        self.n_recv_divs + 4
    }

    /// ROB entries needed to hold the chain, both branches, the load and the
    /// entire sender burst together. At or above this the gap is at its
    /// maximum; in between it shrinks as fewer senders fit.
    pub fn burst_footprint(&self) -> u32 {
        self.n_recv_divs + 3 + self.sender_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_round_trip_through_text() {
        let bits: SecretBits = "0110 1".parse().unwrap();
        assert_eq!(bits.bits(), &[0, 1, 1, 0, 1]);
        assert_eq!(bits.to_string(), "01101");
        assert!("012".parse::<SecretBits>().is_err());
    }

    #[test]
    fn default_sender_count_covers_window() {
        let p = ChannelParams::default();
        // 12 * 13 = 156 cycles of window, one division per 4 cycles.
        assert_eq!(p.sender_count(), 39 + SENDER_MARGIN);
        assert_eq!(p.burst_footprint(), 12 + 3 + 43);
        assert_eq!(p.attack_footprint(), 12 + 3 + 1);
    }

    #[test]
    fn zero_receivers_rejected() {
        assert!(ChannelParams::default().with_recv_divs(0).validate().is_err());
        assert!(ChannelParams::default().with_trials(0).validate().is_err());
    }

    #[test]
    fn json_uses_field_names() {
        let text = serde_json::to_string(&ChannelParams::default()).unwrap();
        assert_eq!(
            text,
            r#"{"n_recv_divs":12,"n_send_divs":null,"fu_preset":"skylake_divsd","secret_bits":"01","trials_per_bit":1000}"#
        );
        let partial: ChannelParams = serde_json::from_str(r#"{"n_recv_divs":6}"#).unwrap();
        assert_eq!(partial, ChannelParams::default().with_recv_divs(6));
        assert!(serde_json::from_str::<ChannelParams>(r#"{"n_recv":6}"#).is_err());
    }
}
