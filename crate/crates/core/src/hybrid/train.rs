use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::HybridModel;
use crate::datasets::Dataset;
use crate::neural::{adam_step, AdamState, Tensor, DEFAULT_LR};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Drives batch order; model initialization takes its own seed.
    pub seed: u64,
    /// Keep circuit weights fixed (their Jacobian columns are skipped).
    pub freeze_quantum_weights: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            lr: DEFAULT_LR,
            batch_size: 32,
            seed: 0,
            freeze_quantum_weights: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        // lr = 0 is accepted: it gives a frozen, evaluation-only run
        if !self.lr.is_finite() || self.lr < 0.0 {
            return Err(Error::Config(format!("learning rate {} must be finite and >= 0", self.lr)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-sample loss over the epoch's updates.
    pub train_loss: f64,
    /// Accuracy on the whole training set after the epoch.
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,train_acc,val_acc\n");
        for e in &self.epochs {
            let val = e.val_acc.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, e.train_acc, val));
        }
        s
    }
}

fn check_dataset(model: &HybridModel, data: &Dataset) -> Result<()> {
    let n = model.n_classes();
    if data.n_classes() != n {
        return Err(Error::Compatibility(format!(
            "dataset has {} classes, model has {n}",
            data.n_classes()
        )));
    }
    if let Some(item) = data.items.iter().find(|i| i.label >= n) {
        return Err(Error::Argument(format!("{}: label {} out of range", item.source_id, item.label)));
    }
    Ok(())
}

/// Mini-batch Adam on softmax cross-entropy. Samples in a batch are
/// processed in parallel; gradients are summed in batch order, so results do
/// not depend on the thread count.
pub fn train(model: &mut HybridModel, train_set: &Dataset, val_set: Option<&Dataset>, config: &TrainConfig) -> Result<TrainHistory> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    check_dataset(model, train_set)?;
    if let Some(v) = val_set {
        check_dataset(model, v)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::with_lr(config.lr);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let frozen = &*model;
            let results = batch
                .par_iter()
                .map(|&i| {
                    let item = &train_set.items[i];
                    frozen.backward(&item.pixels, item.label, config.freeze_quantum_weights)
                })
                .collect::<Result<Vec<_>>>()?;

            let mut grads: Vec<Tensor> = model.params().iter().map(|p| Tensor::zeros(p.shape())).collect();
            for r in &results {
                loss_sum += r.loss;
                for (acc, g) in grads.iter_mut().zip(&r.grads) {
                    acc.add_assign(g)?;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| g.scale(scale));
            adam_step(&mut model.params_mut(), &grads, &mut adam)?;
        }

        let train_acc = accuracy(model, train_set)?;
        let val_acc = val_set.map(|v| accuracy(model, v)).transpose()?;
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_acc,
            val_acc,
        };
        log::info!(
            "epoch {epoch}/{}: loss {:.4} train acc {:.4} val acc {}",
            config.epochs,
            stats.train_loss,
            stats.train_acc,
            val_acc.map_or("-".to_string(), |v| format!("{v:.4}"))
        );
        history.epochs.push(stats);
    }
    Ok(history)
}

/// Argmax prediction for every item, in dataset order, plus ground truths.
pub fn evaluate(model: &HybridModel, data: &Dataset) -> Result<(Vec<usize>, Vec<usize>)> {
    let predictions = data
        .items
        .par_iter()
        .map(|item| model.predict(&item.pixels))
        .collect::<Result<Vec<_>>>()?;
    Ok((predictions, data.labels()))
}

pub fn accuracy(model: &HybridModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let (pred, truth) = evaluate(model, data)?;
    let correct = pred.iter().zip(&truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / data.len() as f64)
}
