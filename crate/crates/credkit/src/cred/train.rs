//! Mini-batch training with adaptive moments and early stopping on
//! validation loss.

use super::dataset::Dataset;
use super::model::CredModel;
use crate::error::{CredError, Result};
use crate::nn::{bce_loss, bce_sigmoid_grad, AdamState, Mode, Real, Tensor};
use crate::rng::Rng;
use std::path::Path;

/// Training hyperparameters. Shuffling and batch order derive from the
/// model's own seed, so a run is reproducible from (config, data, hyper).
#[derive(Debug, Clone)]
pub struct Hyper {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub patience: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            epochs: 100,
            batch_size: 32,
            lr: 1e-3,
            patience: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    /// Mean |probability - label| over the validation set.
    pub mean_abs_error: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub epochs_run: usize,
    /// 1-based epoch at which patience ran out, if it did.
    pub early_stop_epoch: Option<usize>,
}

impl TrainReport {
    /// One CSV row per epoch.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out =
            String::from("epoch,train_loss,val_loss,train_accuracy,val_accuracy,mean_abs_error\n");
        for (i, r) in self.epochs.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                i + 1,
                r.train_loss,
                r.val_loss,
                r.train_accuracy,
                r.val_accuracy,
                r.mean_abs_error
            ));
        }
        std::fs::write(path.as_ref(), out).map_err(|source| CredError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        })
    }
}

/// Loss, frame accuracy at a 0.5 cut, and mean absolute error of
/// predictions against pooled labels.
fn score<T: Real>(probs: &Tensor<T>, labels: &Tensor<T>) -> Result<(f64, f64, f64)> {
    let (loss, _) = bce_loss(probs, labels)?;
    let mut correct = 0usize;
    let mut abs_err = 0.0f64;
    for (p, y) in probs.data.iter().zip(&labels.data) {
        let p = p.to_f64();
        let y = y.to_f64();
        if (p >= 0.5) == (y >= 0.5) {
            correct += 1;
        }
        abs_err += (p - y).abs();
    }
    let n = probs.numel().max(1) as f64;
    Ok((loss.to_f64(), correct as f64 / n, abs_err / n))
}

/// Minimizes the per-frame cross-entropy on `train_set`, evaluating
/// `val_set` after every epoch. Returns the parameters that achieved the
/// best validation loss together with the per-epoch report.
///
/// Batches are reshuffled every epoch from the model seed. A trailing
/// partial batch is kept, except that a batch of one sample cannot supply
/// batch statistics and is skipped.
pub fn train<T: Real>(
    model: CredModel<T>,
    train_set: &Dataset<T>,
    val_set: &Dataset<T>,
    hyper: &Hyper,
) -> Result<(CredModel<T>, TrainReport)> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(CredError::EmptyDataset);
    }
    if hyper.batch_size < 2 {
        return Err(CredError::InvalidConfig(
            "batch_size must be >= 2 for batch statistics".into(),
        ));
    }
    train_set.check_geometry(&model.config)?;
    val_set.check_geometry(&model.config)?;

    let mut report = TrainReport::default();
    if hyper.epochs == 0 {
        return Ok((model, report));
    }

    let mut model = model;
    let lens: Vec<usize> = model.trainable().iter().map(|s| s.len()).collect();
    let mut adam = AdamState::<T>::new(hyper.lr, &lens);

    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut stale = 0usize;

    let n = train_set.len();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..hyper.epochs {
        let mut rng = Rng::derive(model.config.seed, (1 << 32) | epoch as u64);
        rng.shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut acc_sum = 0.0;
        let mut weight = 0.0;
        for chunk in order.chunks(hyper.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let (bx, by) = train_set.select(chunk);
            let (probs, cache) = model.forward_train(&bx)?;
            let (loss, acc, _) = score(&probs, &by)?;
            let dlogits = bce_sigmoid_grad(&probs, &by)?;
            let grads = model.backward_from_logits(&cache, &dlogits)?;

            let gslices = grads.trainable();
            let mut pslices = model.trainable_mut();
            adam.step(&mut pslices, &gslices)?;

            let w = chunk.len() as f64;
            loss_sum += loss * w;
            acc_sum += acc * w;
            weight += w;
        }
        if weight == 0.0 {
            return Err(CredError::InvalidConfig(
                "no batch of size >= 2 could be formed".into(),
            ));
        }

        let val_probs = model.forward(&val_set.x, Mode::Infer)?;
        let (val_loss, val_acc, mae) = score(&val_probs, &val_set.y)?;
        report.epochs.push(EpochRecord {
            train_loss: loss_sum / weight,
            val_loss,
            train_accuracy: acc_sum / weight,
            val_accuracy: val_acc,
            mean_abs_error: mae,
        });

        if val_loss < best_val {
            best_val = val_loss;
            best = model.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= hyper.patience {
                report.early_stop_epoch = Some(epoch + 1);
                break;
            }
        }
    }
    report.epochs_run = report.epochs.len();
    Ok((best, report))
}
