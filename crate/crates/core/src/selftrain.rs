//! Iterative self-training: pseudo-label the pool, select by confidence,
//! optionally balance the classes, retrain, evaluate, repeat.
//!
//! Each iteration warm-starts from the previous state and regenerates its
//! pseudo-labels from scratch; nothing selected in earlier rounds carries
//! over.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::{DatasetBundle, Sample};
use crate::learner::{
    evaluate, init_learner, train, AugmentConfig, LearnerState, SampleValidator, TrainConfig,
    TrainExample, TrainingLog, Validator,
};
use crate::metrics::FairnessReport;
use crate::selection::{class_counts, pseudo_balance, pseudo_label, ThresholdPolicy};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Pseudo-labeled inputs are used as-is.
    PlainRetrain,
    /// Pseudo-labeled inputs get a fresh strong view every epoch.
    Consistency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfTrainConfig {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub policy: ThresholdPolicy,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub aug: AugmentConfig,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    /// Master seed. Not part of the serialized form: the experiment config
    /// carries a single top-level seed and copies it here.
    #[serde(skip)]
    pub seed: u64,
}

fn default_iterations() -> usize {
    7
}
fn default_variant() -> Variant {
    Variant::Consistency
}

impl Default for SelfTrainConfig {
    fn default() -> Self {
        Self {
            iterations: default_iterations(),
            policy: ThresholdPolicy::default(),
            train: TrainConfig::default(),
            aug: AugmentConfig::default(),
            variant: default_variant(),
            seed: 0,
        }
    }
}

impl SelfTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        self.policy.validate()?;
        self.train.validate()?;
        self.aug.validate()
    }

    /// Seed of iteration `i` (1-based).
    pub fn iteration_seed(&self, iteration: usize) -> u64 {
        seed::iteration_seed(self.seed, iteration)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub policy: ThresholdPolicy,
    pub n_selected: usize,
    pub n_balanced: usize,
    /// Per-class counts of the pseudo-labels used for retraining.
    pub n_per_class: [usize; 2],
    pub val_acc: Option<f64>,
    pub epochs_run: usize,
    pub test: FairnessReport,
}

pub struct IterationOutcome {
    pub state: LearnerState,
    pub record: IterationRecord,
    pub log: TrainingLog,
}

pub struct SelfTrainOutcome {
    pub records: Vec<IterationRecord>,
    pub logs: Vec<TrainingLog>,
    pub final_state: LearnerState,
    pub best_state: LearnerState,
    /// 0 when no iteration beat the initial state's validation accuracy.
    pub best_iteration: usize,
}

pub fn test_report(state: &LearnerState, test: &[Sample]) -> Result<FairnessReport> {
    FairnessReport::from_records(&evaluate(state, test)?)
}

fn validation_accuracy(state: &LearnerState, validation: &[Sample]) -> Result<Option<f64>> {
    SampleValidator(validation).score(state)
}

/// Supervised training of a fresh learner on the labeled partition.
pub fn train_supervised(
    bundle: &DatasetBundle,
    hidden_dim: usize,
    config: &TrainConfig,
    aug: &AugmentConfig,
    seed: u64,
) -> Result<(LearnerState, TrainingLog)> {
    let state = init_learner(bundle.feature_dim, hidden_dim, seed::derive(seed, 0))?;
    let examples = labeled_examples(&bundle.labeled)?;
    train(
        &state,
        &examples,
        &bundle.validation,
        config,
        aug,
        seed::derive(seed, 1),
    )
}

fn labeled_examples(samples: &[Sample]) -> Result<Vec<TrainExample<'_>>> {
    samples
        .iter()
        .map(|s| {
            let label = s
                .label
                .ok_or_else(|| Error::Contract(format!("labeled sample {} has no label", s.id)))?;
            Ok(TrainExample::new(&s.features, label))
        })
        .collect()
}

/// One pseudo-label / select / balance / retrain / evaluate round.
pub fn run_iteration(
    state: &LearnerState,
    bundle: &DatasetBundle,
    config: &SelfTrainConfig,
    iteration: usize,
) -> Result<IterationOutcome> {
    let it_seed = config.iteration_seed(iteration);
    let mut examples = labeled_examples(&bundle.labeled)?;
    if examples.is_empty() {
        return Err(Error::EmptyDataset("labeled partition".into()));
    }

    let (n_selected, chosen) = if bundle.unlabeled.is_empty() {
        (0, Vec::new())
    } else {
        let labels = pseudo_label(
            state,
            &bundle.unlabeled,
            &config.aug,
            seed::derive(it_seed, 0),
        )?;
        let selected = config.policy.select(&labels);
        let n_selected = selected.len();
        let chosen = if config.policy.pseudo_balance {
            pseudo_balance(&selected, seed::derive(it_seed, 1))
        } else {
            selected
        };
        (n_selected, chosen)
    };

    let by_id: HashMap<&str, &Sample> = bundle
        .unlabeled
        .iter()
        .map(|s| (s.id.as_str(), s))
        .collect();
    let strong = config.variant == Variant::Consistency;
    for l in &chosen {
        let sample = by_id[l.sample_id.as_str()];
        examples.push(TrainExample {
            features: &sample.features,
            label: l.predicted_class,
            strong_augment: strong,
        });
    }

    let (new_state, log) = train(
        state,
        &examples,
        &bundle.validation,
        &config.train,
        &config.aug,
        seed::derive(it_seed, 2),
    )?;
    let val_acc = match log.best_val_acc() {
        Some(v) => Some(v),
        None => validation_accuracy(&new_state, &bundle.validation)?,
    };
    let record = IterationRecord {
        iteration,
        policy: config.policy.clone(),
        n_selected,
        n_balanced: chosen.len(),
        n_per_class: class_counts(&chosen),
        val_acc,
        epochs_run: log.epochs.len(),
        test: test_report(&new_state, &bundle.test)?,
    };
    Ok(IterationOutcome {
        state: new_state,
        record,
        log,
    })
}

/// Runs `config.iterations` rounds, threading the state. `on_iteration` sees
/// every outcome as soon as it completes; an error from it aborts the run.
pub fn run_self_training<F>(
    initial: &LearnerState,
    bundle: &DatasetBundle,
    config: &SelfTrainConfig,
    mut on_iteration: F,
) -> Result<SelfTrainOutcome>
where
    F: FnMut(&IterationOutcome) -> Result<()>,
{
    config.validate()?;
    let mut state = initial.clone();
    let mut best_state = initial.clone();
    let mut best_iteration = 0;
    let mut best_val = validation_accuracy(initial, &bundle.validation)?;
    let mut records = Vec::with_capacity(config.iterations);
    let mut logs = Vec::with_capacity(config.iterations);

    for iteration in 1..=config.iterations {
        let outcome = run_iteration(&state, bundle, config, iteration)?;
        on_iteration(&outcome)?;
        let improved = match (outcome.record.val_acc, best_val) {
            (Some(v), Some(b)) => v > b,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if improved {
            best_val = outcome.record.val_acc;
            best_state = outcome.state.clone();
            best_iteration = iteration;
        }
        state = outcome.state;
        records.push(outcome.record);
        logs.push(outcome.log);
    }

    if best_val.is_none() {
        best_state = state.clone();
        best_iteration = config.iterations;
    }
    Ok(SelfTrainOutcome {
        records,
        logs,
        final_state: state,
        best_state,
        best_iteration,
    })
}
