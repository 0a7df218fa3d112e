//! Surrogate training (mini-batch Adam on MSE) and evaluation.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::CircuitGraph;
use crate::optim::Adam;
use crate::rng::rng_from_seed;

use super::{ModelGrads, PreparedGraph, SurrogateModel};

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            batch: 512,
            epochs: 200,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::Invariant(format!("lr must be > 0 (got {})", self.lr)));
        }
        if self.batch == 0 {
            return Err(Error::Invariant("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mini-batch Adam on MSE; deterministic given `cfg.seed` (fixed shuffle
/// order). Returns the per-epoch mean training loss.
pub fn train(
    model: &mut SurrogateModel,
    dataset: &[(CircuitGraph, f64)],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Invariant("training dataset is empty".into()));
    }
    for (_, target) in dataset {
        if !target.is_finite() {
            return Err(Error::Invariant("non-finite training target".into()));
        }
    }
    let prepared: Vec<PreparedGraph> = dataset
        .iter()
        .map(|(g, _)| PreparedGraph::build(g, model.feature_dim()))
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<f64> = dataset.iter().map(|(_, t)| *t).collect();

    let mut params = model.to_flat();
    let mut opt = Adam::new(cfg.lr, params.len());
    let mut shuffle_rng = rng_from_seed(cfg.seed);
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        indices.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for chunk in indices.chunks(cfg.batch) {
            let mut grads = ModelGrads::zeros_like(model);
            let mut batch_loss = 0.0;
            for &idx in chunk {
                let trace = model.forward_prepared(&prepared[idx]);
                let err = trace.output - targets[idx];
                batch_loss += err * err;
                model.backward_prepared(&prepared[idx], &trace, 2.0 * err, &mut grads);
            }
            let scale = 1.0 / chunk.len() as f64;
            grads.scale(scale);
            batch_loss *= scale;
            if !batch_loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "training loss became non-finite at epoch {epoch}"
                )));
            }
            epoch_loss += batch_loss * chunk.len() as f64;
            let flat = grads.to_flat();
            opt.step(&mut params, &flat);
            model.from_flat(&params)?;
        }
        history.push(epoch_loss / dataset.len() as f64);
    }
    Ok(history)
}

/// Forward applied per graph, order-preserving.
pub fn predict_batch(model: &SurrogateModel, graphs: &[CircuitGraph]) -> Result<Vec<f64>> {
    graphs.iter().map(|g| model.forward(g)).collect()
}

/// Coefficient of determination `1 - sum (y - yhat)^2 / sum (y - ybar)^2`.
pub fn r_squared(preds: &[f64], targets: &[f64]) -> Result<f64> {
    if preds.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} predictions vs {} targets",
            preds.len(),
            targets.len()
        )));
    }
    if targets.len() < 2 {
        return Err(Error::Invariant("need at least 2 targets".into()));
    }
    let mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let ss_tot: f64 = targets.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Numerical(
            "R^2 undefined: targets have zero variance".into(),
        ));
    }
    let ss_res: f64 = preds
        .iter()
        .zip(targets)
        .map(|(p, y)| (y - p) * (y - p))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Analytic gradients of the per-sample MSE loss vs central finite
/// differences over a random parameter subset; returns the max relative
/// error. Used to validate the hand-derived backward pass.
pub fn gradient_check(
    model: &SurrogateModel,
    graph: &CircuitGraph,
    target: f64,
    sample_params: usize,
    seed: u64,
) -> Result<f64> {
    use rand::Rng;
    let prepared = PreparedGraph::build(graph, model.feature_dim())?;
    let trace = model.forward_prepared(&prepared);
    let mut grads = ModelGrads::zeros_like(model);
    model.backward_prepared(&prepared, &trace, 2.0 * (trace.output - target), &mut grads);
    let analytic = grads.to_flat();

    let mut probe = model.clone();
    let base = model.to_flat();
    let h = 1e-5;
    let mut rng = rng_from_seed(seed);
    let total = base.len();
    let count = sample_params.min(total);
    let mut worst = 0.0f64;
    let mut flat = base.clone();
    for _ in 0..count {
        let k = rng.random_range(0..total);
        let orig = flat[k];
        flat[k] = orig + h;
        probe.from_flat(&flat)?;
        let tp = probe.forward_prepared(&prepared);
        let lp = (tp.output - target) * (tp.output - target);
        flat[k] = orig - h;
        probe.from_flat(&flat)?;
        let tm = probe.forward_prepared(&prepared);
        let lm = (tm.output - target) * (tm.output - target);
        flat[k] = orig;
        let fd = (lp - lm) / (2.0 * h);
        let denom = analytic[k].abs().max(fd.abs()).max(1e-6);
        worst = worst.max((analytic[k] - fd).abs() / denom);
    }
    Ok(worst)
}
