use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters for contrastive training of a projection head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub temperature: f64,
    pub hidden_layers: usize,
    /// Width of every hidden layer; `None` means twice the projection size.
    pub hidden_width: Option<usize>,
    pub projection_size: usize,
    pub include_self_pairs: bool,
    pub normalize_outputs: bool,
    /// Weight each pair by the inverse in-batch frequency of its same/different indicator.
    pub balance_pairs: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: 10,
            temperature: 0.1,
            hidden_layers: 1,
            hidden_width: None,
            projection_size: 128,
            include_self_pairs: true,
            normalize_outputs: true,
            balance_pairs: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn hidden_width(&self) -> usize {
        self.hidden_width.unwrap_or(2 * self.projection_size)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be positive");
        }
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2");
        }
        if self.projection_size == 0 {
            return bad("projection_size must be positive");
        }
        if self.hidden_width == Some(0) {
            return bad("hidden_width must be positive");
        }
        Ok(())
    }

    pub(crate) fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.clone()
        }
    }
}
