//! Fairness-aware self-training for binary classification.
//!
//! A small softmax network is fine-tuned on its own confident predictions
//! over an unlabeled pool. Before every retraining round the confident
//! pseudo-labels are subsampled so that each predicted class contributes the
//! same number of samples, which counteracts the tendency of self-training to
//! amplify whatever class bias the initial model carries.
//!
//! Modules:
//! - [`data`]: samples, synthetic group-conditional generators, skewed pool
//!   construction, balanced test curation and CSV ingestion.
//! - [`learner`]: one-hidden-layer network trained with minibatch SGD and
//!   momentum, weak/strong augmentation and early stopping.
//! - [`selection`]: pseudo-labeling, fixed and curriculum thresholds, and the
//!   class-balancing subsampler.
//! - [`selftrain`]: the iterative pseudo-label / retrain loop.
//! - [`metrics`]: accuracy, selection rate, gap and the 80% rule.
//! - [`harness`]: experiment configs, run directories, manifests and reports.

pub mod data;
pub mod error;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod seed;
pub mod selection;
pub mod selftrain;

pub use error::{Error, Result};

/// Number of classes handled by every component.
pub const N_CLASSES: usize = 2;
