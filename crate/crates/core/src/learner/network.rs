use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result, N_CLASSES};

pub const DEFAULT_HIDDEN_DIM: usize = 32;

/// Network parameters, row-major.
///
/// `w1` is `hidden × feature`, `w2` is `classes × hidden`. The same layout
/// doubles as a gradient and as a momentum buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Params {
    pub fn zeros(feature_dim: usize, hidden_dim: usize, n_classes: usize) -> Self {
        Self {
            w1: vec![0.0; hidden_dim * feature_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; n_classes * hidden_dim],
            b2: vec![0.0; n_classes],
        }
    }

    fn tensors(&self) -> [&Vec<f64>; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    fn tensors_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All parameters in `w1, b1, w2, b2` order.
    pub fn flat(&self) -> Vec<f64> {
        self.tensors().into_iter().flatten().copied().collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.len());
        let mut it = values.iter();
        for t in self.tensors_mut() {
            for (dst, src) in t.iter_mut().zip(&mut it) {
                *dst = *src;
            }
        }
    }

    pub fn fill(&mut self, value: f64) {
        for t in self.tensors_mut() {
            t.fill(value);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().into_iter().flatten().all(|v| v.is_finite())
    }

    /// `v = momentum * v + grad; self -= lr * v`.
    pub(crate) fn momentum_step(
        &mut self,
        velocity: &mut Params,
        grad: &Params,
        lr: f64,
        momentum: f64,
    ) {
        let own = self.tensors_mut();
        let vel = velocity.tensors_mut();
        for ((p, v), g) in own.into_iter().zip(vel).zip(grad.tensors()) {
            for ((p, v), g) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                *v = momentum * *v + g;
                *p -= lr * *v;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub params: Params,
    pub velocity: Params,
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub n_classes: usize,
    pub rng_seed: u64,
}

/// Weights uniform in `±1/√fan_in`, zero biases, zero velocity.
pub fn init_learner(feature_dim: usize, hidden_dim: usize, seed: u64) -> Result<LearnerState> {
    if feature_dim == 0 || hidden_dim == 0 {
        return Err(Error::Config(format!(
            "learner dimensions must be positive (feature_dim={feature_dim}, hidden_dim={hidden_dim})"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut params = Params::zeros(feature_dim, hidden_dim, N_CLASSES);
    let bound1 = 1.0 / (feature_dim as f64).sqrt();
    for w in &mut params.w1 {
        *w = rng.random_range(-bound1..bound1);
    }
    let bound2 = 1.0 / (hidden_dim as f64).sqrt();
    for w in &mut params.w2 {
        *w = rng.random_range(-bound2..bound2);
    }
    Ok(LearnerState {
        velocity: Params::zeros(feature_dim, hidden_dim, N_CLASSES),
        params,
        feature_dim,
        hidden_dim,
        n_classes: N_CLASSES,
        rng_seed: seed,
    })
}

impl LearnerState {
    pub(crate) fn check_input(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                actual: features.len(),
            });
        }
        Ok(())
    }

    /// Hidden pre-activations and logits. Caller guarantees the dimension.
    pub(crate) fn forward(&self, x: &[f64], pre: &mut [f64], logits: &mut [f64]) {
        let (d, h) = (self.feature_dim, self.hidden_dim);
        let p = &self.params;
        for (j, out) in pre.iter_mut().enumerate() {
            let row = &p.w1[j * d..(j + 1) * d];
            *out = p.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        for (c, out) in logits.iter_mut().enumerate() {
            let row = &p.w2[c * h..(c + 1) * h];
            *out = p.b2[c]
                + row
                    .iter()
                    .zip(pre.iter())
                    .map(|(w, &z)| w * z.max(0.0))
                    .sum::<f64>();
        }
    }

    pub(crate) fn proba_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut pre = vec![0.0; self.hidden_dim];
        let mut logits = vec![0.0; self.n_classes];
        self.forward(x, &mut pre, &mut logits);
        softmax_in_place(&mut logits);
        logits
    }
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

/// Softmax of the network's logits.
pub fn predict_proba(state: &LearnerState, features: &[f64]) -> Result<Vec<f64>> {
    state.check_input(features)?;
    Ok(state.proba_unchecked(features))
}

/// Index of the largest probability; ties go to the lower index.
pub(crate) fn argmax(p: &[f64]) -> (usize, f64) {
    let mut best = (0, p[0]);
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn init_is_deterministic() {
        let a = init_learner(5, 8, 3).unwrap();
        let b = init_learner(5, 8, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.params, init_learner(5, 8, 4).unwrap().params);
    }

    #[test]
    fn init_velocity_zero_and_weights_scaled() {
        let s = init_learner(16, 32, 0).unwrap();
        assert!(s.velocity.flat().iter().all(|&v| v == 0.0));
        assert!(s.params.w1.iter().all(|w| w.abs() <= 0.25));
        assert!(s.params.w2.iter().all(|w| w.abs() <= 1.0 / 32f64.sqrt()));
        let mean = s.params.w1.iter().sum::<f64>() / s.params.w1.len() as f64;
        assert!(mean.abs() < 0.05);
    }

    #[test]
    fn zero_hidden_is_config_error() {
        assert!(matches!(init_learner(3, 0, 1), Err(Error::Config(_))));
        assert!(matches!(init_learner(0, 3, 1), Err(Error::Config(_))));
    }

    #[test]
    fn zero_weights_give_uniform_output() {
        let mut s = init_learner(3, 4, 0).unwrap();
        s.params.fill(0.0);
        assert_eq!(predict_proba(&s, &[1.0, 2.0, 3.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn hand_built_logits() {
        let mut s = init_learner(1, 1, 0).unwrap();
        s.params = Params {
            w1: vec![1.0],
            b1: vec![0.0],
            w2: vec![2.0, 0.0],
            b2: vec![0.0, 0.0],
        };
        let p = predict_proba(&s, &[1.0]).unwrap();
        let e2 = 2f64.exp();
        assert_abs_diff_eq!(p[0], e2 / (e2 + 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 1.0 / (e2 + 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(p[0], 0.8808, epsilon = 1e-4);
    }

    #[test]
    fn probabilities_normalized() {
        let mut rng = seed::rng(77);
        for i in 0..1000 {
            let s = init_learner(4, 6, i).unwrap();
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-10.0..10.0)).collect();
            let p = predict_proba(&s, &x).unwrap();
            assert!(p.iter().all(|&v| v >= 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let s = init_learner(3, 2, 0).unwrap();
        assert!(matches!(
            predict_proba(&s, &[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 1
            })
        ));
    }

    #[test]
    fn argmax_tie_goes_low() {
        assert_eq!(argmax(&[0.5, 0.5]), (0, 0.5));
        assert_eq!(argmax(&[0.4, 0.6]), (1, 0.6));
    }

    #[test]
    fn flat_round_trip() {
        let s = init_learner(3, 2, 5).unwrap();
        let mut p = Params::zeros(3, 2, 2);
        p.set_flat(&s.params.flat());
        assert_eq!(p, s.params);
        assert_eq!(p.len(), 3 * 2 + 2 + 2 * 2 + 2);
    }
}
