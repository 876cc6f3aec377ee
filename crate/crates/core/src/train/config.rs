use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelFamily, ChannelKind, FadingGranularity, FadingOptions, UNIT_MEAN_RAYLEIGH_SCALE};
use crate::error::{Error, Result};
use crate::nn::ActivationKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossVariant {
    /// `L_B − L_E`
    Subtractive,
    /// `L_B + (0.5 − L_E/√N)²`
    #[default]
    Uncertainty,
}

/// Alice's final activation. `Auto` picks tanh on the clear channel and the
/// quantized tanh on noisy ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AliceOutput {
    #[default]
    Auto,
    Tanh,
    TanhDiscrete,
}

/// How plaintext minibatches are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataMode {
    /// Fresh i.i.d. plaintext bits for every minibatch.
    #[default]
    Resample,
    /// A fixed set of `train_symbols` blocks visited in order, wrapping around.
    Cycle,
}

/// Which minibatch Eve trains on in the adversary phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveBatch {
    #[default]
    Fresh,
    Reuse,
}

/// Every training/evaluation hyperparameter. Missing JSON fields take the
/// full-scale defaults (N=96, batch 8000, lr 0.001, L=13, key ratio 0.005).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub n: usize,
    pub train_symbols: usize,
    pub test_symbols: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// `None` resolves to 4000 / 7000 / 8000 for clear / AWGN / Rayleigh.
    pub epochs: Option<usize>,
    pub channel: ChannelFamily,
    pub train_snr_db: f64,
    pub levels: usize,
    pub key_to_data_ratio: f64,
    pub loss_variant: LossVariant,
    pub alice_output: AliceOutput,
    pub data_mode: DataMode,
    pub eve_batch: EveBatch,
    pub rayleigh_scale: f64,
    pub fading_granularity: FadingGranularity,
    pub data_seed: u64,
    pub key_seed: u64,
    pub init_seed: u64,
    pub channel_seed: u64,
    pub test_data_seed: u64,
    pub test_key_seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            n: 96,
            train_symbols: 20_000,
            test_symbols: 1_000,
            batch_size: 8_000,
            learning_rate: 0.001,
            epochs: None,
            channel: ChannelFamily::Clear,
            train_snr_db: 25.0,
            levels: 13,
            key_to_data_ratio: 0.005,
            loss_variant: LossVariant::Uncertainty,
            alice_output: AliceOutput::Auto,
            data_mode: DataMode::Resample,
            eve_batch: EveBatch::Fresh,
            rayleigh_scale: UNIT_MEAN_RAYLEIGH_SCALE,
            fading_granularity: FadingGranularity::PerSample,
            data_seed: 1,
            key_seed: 2,
            init_seed: 3,
            channel_seed: 4,
            test_data_seed: 101,
            test_key_seed: 102,
        }
    }
}

impl TrainingConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n < 2 || self.n % 2 != 0 {
            return bad(format!("n must be even and >= 2, got {}", self.n));
        }
        if self.batch_size == 0 || self.batch_size > self.train_symbols {
            return bad(format!(
                "batch_size must be in 1..=train_symbols ({}), got {}",
                self.train_symbols, self.batch_size
            ));
        }
        if self.test_symbols == 0 {
            return bad("test_symbols must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.key_to_data_ratio > 0.0 && self.key_to_data_ratio <= 1.0) {
            return bad(format!(
                "key_to_data_ratio must be in (0, 1], got {}",
                self.key_to_data_ratio
            ));
        }
        if self.key_pool_size(self.train_symbols) == 0 {
            return bad("key_to_data_ratio x train_symbols rounds to an empty key pool".into());
        }
        if self.levels < 2 {
            return bad(format!("levels must be >= 2, got {}", self.levels));
        }
        if !self.train_snr_db.is_finite() {
            return bad("train_snr_db must be finite".into());
        }
        if !(self.rayleigh_scale > 0.0 && self.rayleigh_scale.is_finite()) {
            return bad(format!("rayleigh_scale must be positive, got {}", self.rayleigh_scale));
        }
        if self.n < 64 && self.key_pool_size(self.train_symbols) as f64 > 2f64.powi(self.n as i32) {
            return bad(format!("cannot draw that many distinct {}-bit keys", self.n));
        }
        Ok(())
    }

    /// `round(ratio × symbols)` distinct keys.
    pub fn key_pool_size(&self, symbols: usize) -> usize {
        (self.key_to_data_ratio * symbols as f64).round() as usize
    }

    /// Key pool size for the test set; at least one key.
    pub fn test_key_pool_size(&self) -> usize {
        self.key_pool_size(self.test_symbols).max(1)
    }

    pub fn resolved_epochs(&self) -> usize {
        self.epochs.unwrap_or(match self.channel {
            ChannelFamily::Clear => 4_000,
            ChannelFamily::Awgn => 7_000,
            ChannelFamily::Rayleigh => 8_000,
        })
    }

    pub fn train_channel(&self) -> ChannelKind {
        self.channel.at_snr(self.train_snr_db)
    }

    pub fn alice_activation(&self) -> ActivationKind {
        let discrete = match self.alice_output {
            AliceOutput::Auto => self.channel != ChannelFamily::Clear,
            AliceOutput::Tanh => false,
            AliceOutput::TanhDiscrete => true,
        };
        if discrete {
            ActivationKind::TanhDiscrete {
                levels: self.levels,
            }
        } else {
            ActivationKind::Tanh
        }
    }

    /// Fading options with per-block size tied to one block of `n` reals.
    pub fn fading(&self) -> FadingOptions {
        FadingOptions {
            rayleigh_scale: self.rayleigh_scale,
            granularity: self.fading_granularity,
            block_symbols: self.n.div_ceil(2),
        }
    }

    /// Replaces every seed with `seed`; distinct RNG streams keep the roles independent.
    pub fn override_seeds(&mut self, seed: u64) {
        self.data_seed = seed;
        self.key_seed = seed;
        self.init_seed = seed;
        self.channel_seed = seed;
        self.test_data_seed = seed.wrapping_add(1);
        self.test_key_seed = seed.wrapping_add(1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_full_scale() {
        let c = TrainingConfig::default();
        assert_eq!((c.n, c.batch_size, c.levels), (96, 8000, 13));
        assert_eq!(c.learning_rate, 0.001);
        assert_eq!(c.key_to_data_ratio, 0.005);
        assert_eq!(c.key_pool_size(c.train_symbols), 100);
        assert_eq!(c.resolved_epochs(), 4000);
        let awgn = TrainingConfig {
            channel: ChannelFamily::Awgn,
            ..c.clone()
        };
        assert_eq!(awgn.resolved_epochs(), 7000);
        assert_eq!(awgn.alice_activation(), ActivationKind::TanhDiscrete { levels: 13 });
        let ray = TrainingConfig {
            channel: ChannelFamily::Rayleigh,
            ..c.clone()
        };
        assert_eq!(ray.resolved_epochs(), 8000);
        assert_eq!(c.alice_activation(), ActivationKind::Tanh);
        c.validate().unwrap();
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c = TrainingConfig::from_json(r#"{"n": 16, "train_symbols": 2000, "batch_size": 512}"#).unwrap();
        assert_eq!(c.n, 16);
        assert_eq!(c.levels, 13);
    }

    #[test]
    fn invalid_configs_rejected() {
        for json in [
            r#"{"n": 15}"#,
            r#"{"batch_size": 30000}"#,
            r#"{"key_to_data_ratio": 0.0}"#,
            r#"{"key_to_data_ratio": 1.5}"#,
            r#"{"levels": 1}"#,
            r#"{"learning_rate": -1.0}"#,
            r#"{"n": 2, "train_symbols": 100, "batch_size": 10, "key_to_data_ratio": 1.0}"#,
            r#"{"unknown_field": 1}"#,
            r#"{"n": "sixteen"}"#,
        ] {
            assert!(
                matches!(TrainingConfig::from_json(json), Err(Error::Config(_))),
                "{json} accepted"
            );
        }
    }

    #[test]
    fn ratio_one_gives_a_key_per_symbol() {
        let c = TrainingConfig {
            key_to_data_ratio: 1.0,
            ..TrainingConfig::default()
        };
        assert_eq!(c.key_pool_size(c.train_symbols), c.train_symbols);
    }
}
