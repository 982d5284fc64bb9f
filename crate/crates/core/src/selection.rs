//! Pseudo-label generation, confidence thresholds and class-balanced
//! subsampling.
//!
//! Thresholds are strict: a label is kept when its confidence is greater
//! than the threshold. For two classes the argmax confidence is never below
//! 0.5, so any fixed threshold under 0.5 (for example 0.1 or 0.3) keeps
//! everything.

use std::collections::BTreeMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::learner::{argmax, augment_with, AugmentConfig, AugmentMode, LearnerState};
use crate::{seed, Error, Result, N_CLASSES};

pub const DEFAULT_BASE_THRESHOLD: f64 = 0.95;
pub const DEFAULT_EPSILON: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    pub sample_id: String,
    pub predicted_class: u8,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdKind {
    Fixed,
    Curriculum,
}

/// Only the field belonging to `kind` is consulted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdPolicy {
    #[serde(default = "default_kind")]
    pub kind: ThresholdKind,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_base")]
    pub base_threshold: f64,
    #[serde(default)]
    pub pseudo_balance: bool,
}

fn default_kind() -> ThresholdKind {
    ThresholdKind::Fixed
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_base() -> f64 {
    DEFAULT_BASE_THRESHOLD
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self::fixed(DEFAULT_EPSILON, true)
    }
}

impl ThresholdPolicy {
    pub fn fixed(epsilon: f64, pseudo_balance: bool) -> Self {
        Self {
            kind: ThresholdKind::Fixed,
            epsilon,
            base_threshold: DEFAULT_BASE_THRESHOLD,
            pseudo_balance,
        }
    }

    pub fn curriculum(base_threshold: f64, pseudo_balance: bool) -> Self {
        Self {
            kind: ThresholdKind::Curriculum,
            epsilon: DEFAULT_EPSILON,
            base_threshold,
            pseudo_balance,
        }
    }

    /// The active threshold field and its name.
    pub fn threshold(&self) -> (&'static str, f64) {
        match self.kind {
            ThresholdKind::Fixed => ("epsilon", self.epsilon),
            ThresholdKind::Curriculum => ("base_threshold", self.base_threshold),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (name, t) = self.threshold();
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Config(format!("{name} must lie in (0,1), got {t}")));
        }
        Ok(())
    }

    pub fn select(&self, labels: &[PseudoLabel]) -> Vec<PseudoLabel> {
        match self.kind {
            ThresholdKind::Fixed => select_fixed(labels, self.epsilon),
            ThresholdKind::Curriculum => select_curriculum(labels, self.base_threshold),
        }
    }
}

/// Labels each pool sample from one weakly augmented view.
pub fn pseudo_label(
    state: &LearnerState,
    pool: &[Sample],
    aug: &AugmentConfig,
    seed: u64,
) -> Result<Vec<PseudoLabel>> {
    if pool.is_empty() {
        return Err(Error::EmptyInput("pseudo-label pool".into()));
    }
    let mut rng = seed::rng(seed);
    pool.iter()
        .map(|s| {
            let view = augment_with(&s.features, aug, AugmentMode::Weak, &mut rng);
            let p = crate::learner::predict_proba(state, &view)?;
            let (class, confidence) = argmax(&p);
            Ok(PseudoLabel {
                sample_id: s.id.clone(),
                predicted_class: class as u8,
                confidence,
            })
        })
        .collect()
}

/// Labels with confidence strictly above `epsilon`, in input order.
pub fn select_fixed(labels: &[PseudoLabel], epsilon: f64) -> Vec<PseudoLabel> {
    labels
        .iter()
        .filter(|l| l.confidence > epsilon)
        .cloned()
        .collect()
}

/// Per-class learning status for curriculum thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningStatus {
    /// Confident predictions per class at the base threshold.
    pub sigma: BTreeMap<u8, usize>,
    /// `sigma_c / max sigma`, or 1 for every class while all sigma are zero.
    pub beta: BTreeMap<u8, f64>,
}

impl LearningStatus {
    pub fn from_sigma(sigma: BTreeMap<u8, usize>) -> Self {
        let max = sigma.values().copied().max().unwrap_or(0);
        let beta = sigma
            .iter()
            .map(|(&c, &s)| {
                let b = if max == 0 { 1.0 } else { s as f64 / max as f64 };
                (c, b)
            })
            .collect();
        Self { sigma, beta }
    }
}

pub fn learning_status(labels: &[PseudoLabel], base_threshold: f64) -> LearningStatus {
    let mut sigma: BTreeMap<u8, usize> = (0..N_CLASSES as u8).map(|c| (c, 0)).collect();
    for l in labels.iter().filter(|l| l.confidence > base_threshold) {
        *sigma.entry(l.predicted_class).or_insert(0) += 1;
    }
    LearningStatus::from_sigma(sigma)
}

/// `base · β/(2 − β)`: equals `base` at β = 1 and 0 at β = 0.
pub fn adjusted_threshold(beta: f64, base_threshold: f64) -> f64 {
    base_threshold * beta / (2.0 - beta)
}

/// Keeps a label when its confidence exceeds its class's adjusted threshold.
pub fn select_curriculum(labels: &[PseudoLabel], base_threshold: f64) -> Vec<PseudoLabel> {
    let status = learning_status(labels, base_threshold);
    let thresholds: BTreeMap<u8, f64> = status
        .beta
        .iter()
        .map(|(&c, &b)| (c, adjusted_threshold(b, base_threshold)))
        .collect();
    labels
        .iter()
        .filter(|l| {
            l.confidence
                > thresholds
                    .get(&l.predicted_class)
                    .copied()
                    .unwrap_or(base_threshold)
        })
        .cloned()
        .collect()
}

/// Subsamples so every class keeps exactly `min_c count_c` labels, drawn
/// uniformly within each class. Only `predicted_class` is read. Output keeps
/// input order.
pub fn pseudo_balance(labels: &[PseudoLabel], seed: u64) -> Vec<PseudoLabel> {
    let mut by_class: [Vec<usize>; N_CLASSES] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        by_class[l.predicted_class as usize].push(i);
    }
    let m = by_class.iter().map(Vec::len).min().unwrap_or(0);
    if m == 0 {
        return Vec::new();
    }
    let mut rng = seed::rng(seed);
    let mut keep: Vec<usize> = Vec::with_capacity(m * N_CLASSES);
    for idx in &by_class {
        keep.extend(
            index::sample(&mut rng, idx.len(), m)
                .into_iter()
                .map(|j| idx[j]),
        );
    }
    keep.sort_unstable();
    keep.into_iter().map(|i| labels[i].clone()).collect()
}

/// Per-class counts of `labels`.
pub fn class_counts(labels: &[PseudoLabel]) -> [usize; N_CLASSES] {
    let mut counts = [0; N_CLASSES];
    for l in labels {
        counts[l.predicted_class as usize] += 1;
    }
    counts
}
