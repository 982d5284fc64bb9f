use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::augment::{augment_with, AugmentMode};
use super::network::{argmax, softmax_in_place, LearnerState, Params};
use super::{AugmentConfig, TrainConfig};
use crate::data::Sample;
use crate::metrics::PredictionRecord;
use crate::{seed, Error, Result};

/// One training input. `strong_augment` marks pseudo-labeled samples whose
/// input is re-perturbed with the strong view every epoch.
#[derive(Debug, Clone, Copy)]
pub struct TrainExample<'a> {
    pub features: &'a [f64],
    pub label: u8,
    pub strong_augment: bool,
}

impl<'a> TrainExample<'a> {
    pub fn new(features: &'a [f64], label: u8) -> Self {
        Self {
            features,
            label,
            strong_augment: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose state was returned; `None` when no validation score was
    /// available and the last state was kept.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl TrainingLog {
    pub fn best_val_acc(&self) -> Option<f64> {
        let best = self.best_epoch?;
        self.epochs.iter().find(|e| e.epoch == best)?.val_acc
    }

    /// `epoch,train_loss,val_acc` rows; missing validation scores are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_acc\n");
        for e in &self.epochs {
            let val = e.val_acc.map(|v| format!("{v:.6}")).unwrap_or_default();
            out.push_str(&format!("{},{:.6},{}\n", e.epoch, e.train_loss, val));
        }
        out
    }
}

/// Scores a state after each epoch for early stopping and checkpointing.
pub trait Validator {
    /// `None` means no validation data.
    fn score(&mut self, state: &LearnerState) -> Result<Option<f64>>;
}

/// Accuracy on a labeled sample set.
pub struct SampleValidator<'a>(pub &'a [Sample]);

impl Validator for SampleValidator<'_> {
    fn score(&mut self, state: &LearnerState) -> Result<Option<f64>> {
        if self.0.is_empty() {
            return Ok(None);
        }
        let records = evaluate(state, self.0)?;
        let correct = records
            .iter()
            .filter(|r| r.predicted_class == r.true_class)
            .count();
        Ok(Some(correct as f64 / records.len() as f64))
    }
}

struct Workspace {
    pre: Vec<f64>,
    logits: Vec<f64>,
    dhidden: Vec<f64>,
}

impl Workspace {
    fn new(state: &LearnerState) -> Self {
        Self {
            pre: vec![0.0; state.hidden_dim],
            logits: vec![0.0; state.n_classes],
            dhidden: vec![0.0; state.hidden_dim],
        }
    }
}

/// Adds `weight * ∇(-log p_label)` into `grad` and returns the loss.
fn accumulate(
    state: &LearnerState,
    x: &[f64],
    label: usize,
    weight: f64,
    ws: &mut Workspace,
    grad: &mut Params,
) -> f64 {
    let (d, h) = (state.feature_dim, state.hidden_dim);
    state.forward(x, &mut ws.pre, &mut ws.logits);
    softmax_in_place(&mut ws.logits);
    let loss = -ws.logits[label].max(f64::MIN_POSITIVE).ln();

    let probs = &mut ws.logits;
    probs[label] -= 1.0;
    ws.dhidden.fill(0.0);
    for (c, &dz) in probs.iter().enumerate() {
        let dz = dz * weight;
        grad.b2[c] += dz;
        let w_row = &state.params.w2[c * h..(c + 1) * h];
        let g_row = &mut grad.w2[c * h..(c + 1) * h];
        for j in 0..h {
            let a = ws.pre[j].max(0.0);
            g_row[j] += dz * a;
            ws.dhidden[j] += dz * w_row[j];
        }
    }
    for j in 0..h {
        if ws.pre[j] <= 0.0 {
            continue;
        }
        let dz = ws.dhidden[j];
        grad.b1[j] += dz;
        let g_row = &mut grad.w1[j * d..(j + 1) * d];
        for (g, v) in g_row.iter_mut().zip(x) {
            *g += dz * v;
        }
    }
    loss
}

fn check_examples(state: &LearnerState, examples: &[TrainExample]) -> Result<()> {
    for ex in examples {
        state.check_input(ex.features)?;
        if ex.label as usize >= state.n_classes {
            return Err(Error::Contract(format!("label {} out of range", ex.label)));
        }
    }
    Ok(())
}

/// Mean cross-entropy over `examples`.
pub fn loss(state: &LearnerState, examples: &[TrainExample]) -> Result<f64> {
    Ok(loss_and_gradient(state, examples)?.0)
}

/// Mean cross-entropy and its analytic gradient.
pub fn loss_and_gradient(state: &LearnerState, examples: &[TrainExample]) -> Result<(f64, Params)> {
    if examples.is_empty() {
        return Err(Error::EmptyInput("gradient batch".into()));
    }
    check_examples(state, examples)?;
    let mut grad = Params::zeros(state.feature_dim, state.hidden_dim, state.n_classes);
    let mut ws = Workspace::new(state);
    let w = 1.0 / examples.len() as f64;
    let mut total = 0.0;
    for ex in examples {
        total += accumulate(state, ex.features, ex.label as usize, w, &mut ws, &mut grad);
    }
    Ok((total * w, grad))
}

/// Trains against accuracy on `validation`.
///
/// Precondition: `validation` is nonempty when `config.patience > 0`.
pub fn train(
    state: &LearnerState,
    examples: &[TrainExample],
    validation: &[Sample],
    config: &TrainConfig,
    aug: &AugmentConfig,
    seed: u64,
) -> Result<(LearnerState, TrainingLog)> {
    if config.patience > 0 && validation.is_empty() && config.epochs_per_iteration > 0 {
        return Err(Error::EmptyInput(
            "validation set is required when patience > 0".into(),
        ));
    }
    train_with(
        state,
        examples,
        &mut SampleValidator(validation),
        config,
        aug,
        seed,
    )
}

/// Minibatch SGD with momentum on mean cross-entropy.
///
/// After every epoch the validator scores the current state. A strictly
/// better score checkpoints the state; `patience` consecutive epochs without
/// one stop training. The best checkpoint is returned, or the last state when
/// the validator never produced a score.
pub fn train_with<V: Validator + ?Sized>(
    state: &LearnerState,
    examples: &[TrainExample],
    validator: &mut V,
    config: &TrainConfig,
    aug: &AugmentConfig,
    seed: u64,
) -> Result<(LearnerState, TrainingLog)> {
    config.validate()?;
    let mut log = TrainingLog::default();
    if config.epochs_per_iteration == 0 {
        return Ok((state.clone(), log));
    }
    if examples.is_empty() {
        return Err(Error::EmptyDataset("training set".into()));
    }
    check_examples(state, examples)?;

    let mut current = state.clone();
    let mut shuffle_rng = seed::rng(seed::derive(seed, 0));
    let mut aug_rng = seed::rng(seed::derive(seed, 1));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut grad = Params::zeros(state.feature_dim, state.hidden_dim, state.n_classes);
    let mut ws = Workspace::new(state);
    let mut best: Option<(f64, usize, LearnerState)> = None;
    let mut stale = 0;

    for epoch in 1..=config.epochs_per_iteration {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.fill(0.0);
            let w = 1.0 / batch.len() as f64;
            for &i in batch {
                let ex = &examples[i];
                let loss = if ex.strong_augment {
                    let view = augment_with(ex.features, aug, AugmentMode::Strong, &mut aug_rng);
                    accumulate(&current, &view, ex.label as usize, w, &mut ws, &mut grad)
                } else {
                    accumulate(
                        &current,
                        ex.features,
                        ex.label as usize,
                        w,
                        &mut ws,
                        &mut grad,
                    )
                };
                epoch_loss += loss;
            }
            let LearnerState {
                params, velocity, ..
            } = &mut current;
            params.momentum_step(velocity, &grad, config.learning_rate, config.momentum);
        }
        let train_loss = epoch_loss / examples.len() as f64;
        if !train_loss.is_finite() || !current.params.all_finite() {
            return Err(Error::NumericalFailure { epoch });
        }

        let val_acc = validator.score(&current)?;
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            val_acc,
        });
        if let Some(acc) = val_acc {
            if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
                best = Some((acc, epoch, current.clone()));
                stale = 0;
            } else {
                stale += 1;
                if config.patience > 0 && stale >= config.patience {
                    log.stopped_early = true;
                    break;
                }
            }
        }
    }

    match best {
        Some((_, epoch, state)) => {
            log.best_epoch = Some(epoch);
            Ok((state, log))
        }
        None => Ok((current, log)),
    }
}

/// One record per sample, in order. Every sample must carry a label.
pub fn evaluate(state: &LearnerState, samples: &[Sample]) -> Result<Vec<PredictionRecord>> {
    samples
        .iter()
        .map(|s| {
            let true_class = s
                .label
                .ok_or_else(|| Error::Contract(format!("sample {} has no label", s.id)))?;
            state.check_input(&s.features)?;
            let p = state.proba_unchecked(&s.features);
            let (predicted, confidence) = argmax(&p);
            Ok(PredictionRecord {
                sample_id: s.id.clone(),
                true_class,
                predicted_class: predicted as u8,
                confidence,
                group: s.group.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GroupKey;
    use crate::learner::init_learner;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn clusters(n: usize, seed: u64) -> Vec<Sample> {
        let mut rng = crate::seed::rng(seed);
        (0..n)
            .map(|i| {
                let class = (i % 2) as u8;
                let mu = if class == 1 { 4.0 } else { -4.0 };
                Sample {
                    id: format!("c{i}"),
                    features: (0..2)
                        .map(|_| mu + 0.5 * rng.sample::<f64, _>(StandardNormal))
                        .collect(),
                    label: Some(class),
                    group: GroupKey::new(class, "A"),
                }
            })
            .collect()
    }

    fn examples(samples: &[Sample]) -> Vec<TrainExample<'_>> {
        samples
            .iter()
            .map(|s| TrainExample::new(&s.features, s.label.unwrap()))
            .collect()
    }

    fn accuracy(records: &[PredictionRecord]) -> f64 {
        records
            .iter()
            .filter(|r| r.true_class == r.predicted_class)
            .count() as f64
            / records.len() as f64
    }

    // Nearest-centroid classifier, independent of the network.
    fn nearest_centroid_accuracy(train: &[Sample], test: &[Sample]) -> f64 {
        let centroid = |c: u8| {
            let xs: Vec<_> = train.iter().filter(|s| s.label == Some(c)).collect();
            let n = xs.len() as f64;
            [0, 1].map(|j| xs.iter().map(|s| s.features[j]).sum::<f64>() / n)
        };
        let cs = [centroid(0), centroid(1)];
        let dist = |x: &[f64], c: &[f64; 2]| (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
        test.iter()
            .filter(|s| {
                let pred = if dist(&s.features, &cs[1]) < dist(&s.features, &cs[0]) {
                    1
                } else {
                    0
                };
                Some(pred) == s.label
            })
            .count() as f64
            / test.len() as f64
    }

    #[test]
    fn separable_clusters_are_learned() {
        let train_set = clusters(200, 1);
        let val = clusters(100, 2);
        let test = clusters(400, 3);
        assert_eq!(nearest_centroid_accuracy(&train_set, &test), 1.0);

        let state = init_learner(2, 32, 0).unwrap();
        let (trained, log) = train(
            &state,
            &examples(&train_set),
            &val,
            &TrainConfig::default(),
            &AugmentConfig::default(),
            0,
        )
        .unwrap();
        assert!(!log.epochs.is_empty());
        let records = evaluate(&trained, &test).unwrap();
        assert!(accuracy(&records) >= 0.99);
        // The trained state reproduces its training clusters perfectly.
        let on_train = evaluate(&trained, &train_set).unwrap();
        assert!(on_train.iter().all(|r| r.true_class == r.predicted_class));
    }

    #[test]
    fn zero_epochs_is_identity() {
        let data = clusters(10, 1);
        let state = init_learner(2, 4, 0).unwrap();
        let config = TrainConfig {
            epochs_per_iteration: 0,
            ..TrainConfig::default()
        };
        let (out, log) = train(
            &state,
            &examples(&data),
            &data,
            &config,
            &AugmentConfig::default(),
            0,
        )
        .unwrap();
        assert_eq!(out, state);
        assert!(log.epochs.is_empty());
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let data = clusters(40, 1);
        let state = init_learner(2, 4, 0).unwrap();
        let config = TrainConfig {
            learning_rate: 0.0,
            patience: 0,
            epochs_per_iteration: 3,
            ..TrainConfig::default()
        };
        let (out, _) = train(
            &state,
            &examples(&data),
            &[],
            &config,
            &AugmentConfig::default(),
            0,
        )
        .unwrap();
        assert_eq!(out.params, state.params);
    }

    struct Scripted(std::vec::IntoIter<f64>);

    impl Validator for Scripted {
        fn score(&mut self, _: &LearnerState) -> Result<Option<f64>> {
            Ok(self.0.next())
        }
    }

    #[test]
    fn flat_validation_stops_after_patience() {
        let data = clusters(40, 1);
        let state = init_learner(2, 4, 0).unwrap();
        let config = TrainConfig::default();
        let aug = AugmentConfig::default();
        let mut v = Scripted(vec![0.7, 0.7, 0.7, 0.9, 0.9].into_iter());
        let (out, log) = train_with(&state, &examples(&data), &mut v, &config, &aug, 5).unwrap();
        assert_eq!(log.epochs.len(), 3);
        assert!(log.stopped_early);
        assert_eq!(log.best_epoch, Some(1));

        let one = TrainConfig {
            epochs_per_iteration: 1,
            ..config
        };
        let mut v = Scripted(vec![0.1].into_iter());
        let (after_one, _) = train_with(&state, &examples(&data), &mut v, &one, &aug, 5).unwrap();
        assert_eq!(out, after_one);
    }

    #[test]
    fn improvement_resets_patience() {
        let data = clusters(20, 1);
        let state = init_learner(2, 4, 0).unwrap();
        let mut v = Scripted(vec![0.5, 0.5, 0.6, 0.6, 0.6, 0.9].into_iter());
        let (_, log) = train_with(
            &state,
            &examples(&data),
            &mut v,
            &TrainConfig::default(),
            &AugmentConfig::default(),
            0,
        )
        .unwrap();
        assert_eq!(log.epochs.len(), 5);
        assert_eq!(log.best_epoch, Some(3));
        assert_eq!(log.best_val_acc(), Some(0.6));
    }

    #[test]
    fn training_is_deterministic() {
        let data = clusters(60, 4);
        let state = init_learner(2, 8, 1).unwrap();
        let mut ex = examples(&data);
        for e in ex.iter_mut().step_by(3) {
            e.strong_augment = true;
        }
        let run = || {
            train(
                &state,
                &ex,
                &data,
                &TrainConfig::default(),
                &AugmentConfig::default(),
                9,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn empty_training_set_is_error() {
        let state = init_learner(2, 4, 0).unwrap();
        let val = clusters(4, 0);
        let err = train(
            &state,
            &[],
            &val,
            &TrainConfig::default(),
            &AugmentConfig::default(),
            0,
        );
        assert!(matches!(err, Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn missing_validation_with_patience_is_error() {
        let data = clusters(4, 0);
        let state = init_learner(2, 4, 0).unwrap();
        let err = train(
            &state,
            &examples(&data),
            &[],
            &TrainConfig::default(),
            &AugmentConfig::default(),
            0,
        );
        assert!(matches!(err, Err(Error::EmptyInput(_))));
    }

    #[test]
    fn divergence_reports_epoch() {
        let data = clusters(32, 0);
        let state = init_learner(2, 4, 0).unwrap();
        let config = TrainConfig {
            learning_rate: 1e300,
            patience: 0,
            ..TrainConfig::default()
        };
        let err = train(
            &state,
            &examples(&data),
            &[],
            &config,
            &AugmentConfig::default(),
            0,
        );
        assert!(matches!(err, Err(Error::NumericalFailure { epoch: 1 })));
    }

    #[test]
    fn evaluate_contract() {
        let state = init_learner(2, 4, 0).unwrap();
        assert!(evaluate(&state, &[]).unwrap().is_empty());
        let data = clusters(50, 2);
        for r in evaluate(&state, &data).unwrap() {
            assert!((0.5..=1.0).contains(&r.confidence));
        }
        let unlabeled = vec![data[0].unlabeled()];
        assert!(matches!(
            evaluate(&state, &unlabeled),
            Err(Error::Contract(_))
        ));
    }
}
