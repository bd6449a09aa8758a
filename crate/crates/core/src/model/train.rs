use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{backward, forward_tape, Tape};
use super::params::LstmParams;
use crate::error::{Error, Result};
use crate::graphfeat::FEATURE_COUNT;
use crate::timeseries::WindowSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
    /// Loss multiplier for positive (malicious) samples.
    pub malicious_weight: f64,
    pub batch_size: usize,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 1e-3,
            rmsprop_decay: 0.9,
            rmsprop_epsilon: 1e-8,
            malicious_weight: 6.0,
            batch_size: 32,
            hidden_dim: 64,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("training: {what}")));
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if !(self.rmsprop_decay > 0.0 && self.rmsprop_decay < 1.0) {
            return bad("rmsprop decay must lie in (0, 1)");
        }
        if !(self.rmsprop_epsilon > 0.0 && self.rmsprop_epsilon.is_finite()) {
            return bad("rmsprop epsilon must be positive");
        }
        if !(self.malicious_weight > 0.0 && self.malicious_weight.is_finite()) {
            return bad("malicious weight must be positive");
        }
        if self.batch_size == 0 || self.hidden_dim == 0 {
            return bad("batch size and hidden size must be positive");
        }
        Ok(())
    }
}

pub(crate) fn sample_weight(label: bool, malicious_weight: f64) -> f64 {
    if label {
        malicious_weight
    } else {
        1.0
    }
}

/// Weighted mean squared error: `mean(w (score - y)^2)`, `w = malicious_weight` for positives.
pub fn loss(scores: &[f64], labels: &[bool], malicious_weight: f64) -> f64 {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    if scores.is_empty() {
        return 0.0;
    }
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| {
            let e = s - f64::from(u8::from(y));
            sample_weight(y, malicious_weight) * e * e
        })
        .sum();
    total / scores.len() as f64
}

/// RMSProp: `v ← ρ v + (1 − ρ) g²`, `θ ← θ − lr · g / (√v + ε)`.
#[derive(Debug, Clone)]
pub struct RmsProp {
    lr: f64,
    decay: f64,
    eps: f64,
    mean_square: Vec<f64>,
}

impl RmsProp {
    pub fn new(len: usize, lr: f64, decay: f64, eps: f64) -> Self {
        Self {
            lr,
            decay,
            eps,
            mean_square: vec![0.0; len],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        for ((p, &g), v) in params.iter_mut().zip(grad).zip(self.mean_square.iter_mut()) {
            *v = self.decay * *v + (1.0 - self.decay) * g * g;
            *p -= self.lr * g / (v.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: LstmParams,
    /// Mean weighted loss per epoch, accumulated over that epoch's mini-batches.
    pub loss_history: Vec<f64>,
}

fn check_samples(samples: &[WindowSample]) -> Result<()> {
    for s in samples {
        if s.matrix.is_empty() || s.matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "sample for host {} at interval {} is empty or non-finite",
                s.host, s.start_interval
            )));
        }
    }
    Ok(())
}

/// Mini-batch RMSProp through full backpropagation through time.
///
/// Deterministic for a given `cfg.seed` and sample order: the seed drives
/// both initialization and the per-epoch shuffle.
pub fn train(samples: &[WindowSample], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Config("no training samples".into()));
    }
    let positives = samples.iter().filter(|s| s.label).count();
    if positives == 0 || positives == samples.len() {
        return Err(Error::Config(
            "training data must contain both malicious and benign samples".into(),
        ));
    }
    check_samples(samples)?;

    let mut params = LstmParams::init(FEATURE_COUNT, cfg.hidden_dim, cfg.seed);
    let mut opt = RmsProp::new(params.len(), cfg.learning_rate, cfg.rmsprop_decay, cfg.rmsprop_epsilon);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);

    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut grad = vec![0.0; params.len()];
    let mut per_sample_loss = vec![0.0; samples.len()];
    let mut tape = Tape::default();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let inv = 1.0 / batch.len() as f64;
            for &k in batch {
                let sample = &samples[k];
                let score = forward_tape(&params, &sample.matrix, &mut tape);
                let w = sample_weight(sample.label, cfg.malicious_weight);
                let err = score - f64::from(u8::from(sample.label));
                per_sample_loss[k] = w * err * err;
                backward(&params, &mut tape, 2.0 * w * err * inv, &mut grad);
            }
            opt.step(params.as_mut_slice(), &grad);
        }
        // Summed in sample order so the value does not depend on the shuffle.
        let epoch_loss = per_sample_loss.iter().sum::<f64>() / samples.len() as f64;
        if !epoch_loss.is_finite() || !params.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: epoch_loss,
            });
        }
        history.push(epoch_loss);
    }
    Ok(TrainOutcome {
        params,
        loss_history: history,
    })
}

/// Scores every sample; parallel over samples, output in input order.
pub fn predict_scores(params: &LstmParams, samples: &[WindowSample]) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    if params.input_dim() != FEATURE_COUNT {
        return Err(Error::Model(format!(
            "model expects {} features per interval, data has {FEATURE_COUNT}",
            params.input_dim()
        )));
    }
    check_samples(samples)?;
    Ok(samples
        .par_iter()
        .map_init(Tape::default, |tape, s| forward_tape(params, &s.matrix, tape))
        .collect())
}
