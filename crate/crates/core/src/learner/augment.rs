use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::AugmentConfig;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentMode {
    Weak,
    Strong,
}

/// Weak: additive Gaussian noise. Strong: larger noise, then each coordinate
/// zeroed independently with `strong_mask_prob`.
pub fn augment(features: &[f64], config: &AugmentConfig, mode: AugmentMode, seed: u64) -> Vec<f64> {
    augment_with(features, config, mode, &mut seed::rng(seed))
}

pub fn augment_with<R: Rng + ?Sized>(
    features: &[f64],
    config: &AugmentConfig,
    mode: AugmentMode,
    rng: &mut R,
) -> Vec<f64> {
    let sigma = match mode {
        AugmentMode::Weak => config.weak_noise_sigma,
        AugmentMode::Strong => config.strong_noise_sigma,
    };
    features
        .iter()
        .map(|&x| {
            let mut v = if sigma > 0.0 {
                x + sigma * rng.sample::<f64, _>(StandardNormal)
            } else {
                x
            };
            if mode == AugmentMode::Strong
                && config.strong_mask_prob > 0.0
                && rng.random::<f64>() < config.strong_mask_prob
            {
                v = 0.0;
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: [f64; 4] = [1.0, -2.0, 0.5, 3.0];

    #[test]
    fn zero_sigma_is_identity() {
        let c = AugmentConfig::identity();
        assert_eq!(augment(&X, &c, AugmentMode::Weak, 1), X.to_vec());
        assert_eq!(augment(&X, &c, AugmentMode::Strong, 1), X.to_vec());
    }

    #[test]
    fn full_mask_zeroes_everything() {
        let c = AugmentConfig {
            weak_noise_sigma: 0.0,
            strong_noise_sigma: 0.5,
            strong_mask_prob: 1.0,
        };
        assert_eq!(augment(&X, &c, AugmentMode::Strong, 9), vec![0.0; 4]);
    }

    #[test]
    fn seeded_and_noisy() {
        let c = AugmentConfig::default();
        let a = augment(&X, &c, AugmentMode::Weak, 4);
        assert_eq!(a, augment(&X, &c, AugmentMode::Weak, 4));
        assert_ne!(a, X.to_vec());
        assert_ne!(a, augment(&X, &c, AugmentMode::Weak, 5));
    }

    #[test]
    fn strong_noise_is_larger_than_weak() {
        let c = AugmentConfig {
            weak_noise_sigma: 0.05,
            strong_noise_sigma: 0.5,
            strong_mask_prob: 0.0,
        };
        let zeros = vec![0.0; 20_000];
        let var = |v: Vec<f64>| v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        let weak = var(augment(&zeros, &c, AugmentMode::Weak, 1));
        let strong = var(augment(&zeros, &c, AugmentMode::Strong, 1));
        assert!((weak.sqrt() - 0.05).abs() < 0.002);
        assert!((strong.sqrt() - 0.5).abs() < 0.02);
    }
}
