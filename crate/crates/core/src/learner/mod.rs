//! One-hidden-layer softmax classifier trained with minibatch SGD and
//! momentum.

mod augment;
mod network;
mod train;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use augment::{augment, augment_with, AugmentMode};
pub(crate) use network::argmax;
pub use network::{init_learner, predict_proba, LearnerState, Params, DEFAULT_HIDDEN_DIM};
pub use train::{
    evaluate, loss, loss_and_gradient, train, train_with, EpochLog, SampleValidator, TrainExample,
    TrainingLog, Validator,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs_per_iteration: usize,
    /// Epochs without strict validation improvement before stopping.
    /// Zero disables early stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            momentum: 0.9,
            batch_size: 16,
            epochs_per_iteration: 10,
            patience: 2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be finite and nonnegative, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0,1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// Perturbation strengths for weak (label-producing) and strong
/// (training-input) views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    pub weak_noise_sigma: f64,
    pub strong_noise_sigma: f64,
    pub strong_mask_prob: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            weak_noise_sigma: 0.05,
            strong_noise_sigma: 0.2,
            strong_mask_prob: 0.2,
        }
    }
}

impl AugmentConfig {
    /// No perturbation at all.
    pub fn identity() -> Self {
        Self {
            weak_noise_sigma: 0.0,
            strong_noise_sigma: 0.0,
            strong_mask_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weak_noise_sigma.is_finite() && self.weak_noise_sigma >= 0.0) {
            return Err(Error::Config(
                "weak_noise_sigma must be finite and nonnegative".into(),
            ));
        }
        if !(self.strong_noise_sigma.is_finite()
            && self.strong_noise_sigma >= self.weak_noise_sigma)
        {
            return Err(Error::Config(
                "strong_noise_sigma must be finite and at least weak_noise_sigma".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.strong_mask_prob) {
            return Err(Error::Config("strong_mask_prob must lie in [0,1)".into()));
        }
        Ok(())
    }
}
