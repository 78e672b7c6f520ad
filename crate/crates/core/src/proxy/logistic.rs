//! L2-regularized logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use crate::error::{Error, Result};

/// Predictions are clamped to `[EPS, 1 - EPS]` inside the log-loss.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 1e-2,
            epochs: 200,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub features: FeatureVector,
    pub label: u8,
}

impl LabeledExample {
    pub fn new(features: FeatureVector, label: u8) -> Self {
        LabeledExample { features, label }
    }

    pub fn y(&self) -> f64 {
        f64::from(self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub config: TrainConfig,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Natural-log binary cross-entropy with clamped probability.
pub fn log_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

impl TrainedModel {
    /// The untrained model `θ = 0`.
    pub fn zeros(dim: usize, config: TrainConfig) -> Self {
        TrainedModel {
            w: vec![0.0; dim],
            b: 0.0,
            config,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn logit(&self, x: &FeatureVector) -> f64 {
        self.w.iter().zip(x.as_slice()).map(|(w, x)| w * x).sum::<f64>() + self.b
    }

    pub fn predict(&self, x: &FeatureVector) -> f64 {
        sigmoid(self.logit(x))
    }

    pub fn is_finite(&self) -> bool {
        self.b.is_finite() && self.w.iter().all(|w| w.is_finite())
    }

    /// Mean per-sample log-loss plus `λ/2 · ‖θ‖²` (bias included).
    pub fn regularized_loss(&self, examples: &[&LabeledExample]) -> f64 {
        let data = if examples.is_empty() {
            0.0
        } else {
            examples
                .iter()
                .map(|e| log_loss(self.predict(&e.features), e.y()))
                .sum::<f64>()
                / examples.len() as f64
        };
        let sq = self.w.iter().map(|w| w * w).sum::<f64>() + self.b * self.b;
        data + 0.5 * self.config.lambda * sq
    }

    /// Gradient of [`regularized_loss`](Self::regularized_loss) as
    /// `(∂w, ∂b)`.
    pub fn regularized_gradient(&self, examples: &[&LabeledExample]) -> (Vec<f64>, f64) {
        let lambda = self.config.lambda;
        let mut gw: Vec<f64> = self.w.iter().map(|w| lambda * w).collect();
        let mut gb = lambda * self.b;
        if !examples.is_empty() {
            let scale = 1.0 / examples.len() as f64;
            for e in examples {
                let r = (self.predict(&e.features) - e.y()) * scale;
                for (g, x) in gw.iter_mut().zip(e.features.as_slice()) {
                    *g += r * x;
                }
                gb += r;
            }
        }
        (gw, gb)
    }
}

/// One training checkpoint, reported after every epoch.
pub struct Checkpoint<'a> {
    pub epoch: usize,
    pub model: &'a TrainedModel,
    pub loss: f64,
}

fn check_inputs(examples: &[&LabeledExample], config: &TrainConfig) -> Result<usize> {
    let Some(first) = examples.first() else {
        return Err(Error::invalid("cannot train on an empty example set"));
    };
    if !(config.lambda > 0.0) {
        return Err(Error::invalid(format!("lambda must be > 0, got {}", config.lambda)));
    }
    if !(config.learning_rate > 0.0) {
        return Err(Error::invalid("learning rate must be > 0"));
    }
    let dim = first.features.dim();
    for e in examples {
        if e.features.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: e.features.dim(),
            });
        }
    }
    Ok(dim)
}

/// Full-batch gradient descent from `θ = 0`, calling `observer` after every
/// epoch. Fails if the loss becomes non-finite.
pub fn train_logistic_observed(
    examples: &[&LabeledExample],
    config: TrainConfig,
    observer: &mut dyn FnMut(&Checkpoint<'_>),
) -> Result<TrainedModel> {
    let dim = check_inputs(examples, &config)?;
    let mut model = TrainedModel::zeros(dim, config);
    for epoch in 1..=config.epochs {
        let (gw, gb) = model.regularized_gradient(examples);
        for (w, g) in model.w.iter_mut().zip(&gw) {
            *w -= config.learning_rate * g;
        }
        model.b -= config.learning_rate * gb;
        let loss = model.regularized_loss(examples);
        if !loss.is_finite() || !model.is_finite() {
            return Err(Error::Numerical(format!(
                "training diverged at epoch {epoch} (learning rate {})",
                config.learning_rate
            )));
        }
        observer(&Checkpoint {
            epoch,
            model: &model,
            loss,
        });
    }
    Ok(model)
}

pub fn train_logistic(examples: &[&LabeledExample], config: TrainConfig) -> Result<TrainedModel> {
    train_logistic_observed(examples, config, &mut |_| {})
}
