use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TargetStore;
use crate::error::{Error, Result};
use crate::eval::{normalize_map, Normalization};
use crate::fsio::{read_to_string, write_atomic};
use crate::models::{Sgd, StudentExplainer};
use crate::numerics::{derive_seed, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub validation_fraction: f64,
    /// L2 penalty coefficient added to every parameter gradient.
    pub weight_decay: f64,
    /// Per-sequence normalization applied to the targets before regression.
    pub target_normalization: Normalization,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.03,
            momentum: 0.9,
            batch_size: 32,
            max_epochs: 1000,
            patience: 10,
            validation_fraction: 0.1,
            weight_decay: 0.0,
            target_normalization: Normalization::UnitInterval,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::config("learning rate, batch size and patience must be positive"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::config("weight decay must be non-negative"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::config(format!(
                "validation fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// Mean squared difference over all positions.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::ShapeMismatch {
            op: "mse_loss",
            detail: format!("{} predictions vs {} targets", pred.len(), target.len()),
        });
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}

fn mean_mse(student: &StudentExplainer, store: &TargetStore, targets: &[Vec<f64>], indices: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for &i in indices {
        total += mse_loss(&student.student_forward(&store.maps[i].tokens)?, &targets[i])?;
    }
    Ok(total / indices.len() as f64)
}

/// Regresses the store's (optionally normalized) target scores over all T positions (pads
/// included) with momentum SGD. A seeded shuffle carves the validation set
/// out of the store; training stops after `patience` epochs without a
/// validation improvement and the best-validation parameters are returned.
pub fn train_student(
    student: StudentExplainer,
    store: &TargetStore,
    config: &TrainConfig,
) -> Result<(StudentExplainer, Vec<EpochRecord>)> {
    config.validate()?;
    if config.max_epochs == 0 {
        return Ok((student, Vec::new()));
    }
    let t = student.seq_len();
    if let Some(bad) = store.maps.iter().find(|m| m.tokens.len() != t) {
        return Err(Error::SequenceLength {
            expected: t,
            actual: bad.tokens.len(),
        });
    }
    if store.len() < 2 {
        return Err(Error::config("need at least two targets to hold out a validation set"));
    }

    let targets: Vec<Vec<f64>> = store
        .maps
        .iter()
        .map(|m| normalize_map(&m.scores, config.target_normalization))
        .collect();
    let mut order: Vec<usize> = (0..store.len()).collect();
    SeededRng::new(derive_seed(config.seed, 0)).shuffle(&mut order);
    let n_val = ((store.len() as f64 * config.validation_fraction).round() as usize).clamp(1, store.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    let mut batch_rng = SeededRng::new(derive_seed(config.seed, 1));

    let mut model = student;
    let mut opt = Sgd::new(model.network(), config.learning_rate, config.momentum);
    let mut best = (mean_mse(&model, store, &targets, val_idx)?, model.clone());
    let mut best_epoch = 0;
    let mut history = Vec::new();

    for epoch in 1..=config.max_epochs {
        batch_rng.shuffle(&mut train_idx);
        let mut train_total = 0.0;
        for batch in train_idx.chunks(config.batch_size) {
            let net = model.network();
            let mut grads = net.zero_grads();
            for &i in batch {
                let (tokens, y) = (&store.maps[i].tokens, &targets[i]);
                let cache = net.forward_embedded_cached(&net.embed(tokens)?)?;
                train_total += mse_loss(&cache.output, y)?;
                let d_out: Vec<f64> = cache
                    .output
                    .iter()
                    .zip(y)
                    .map(|(p, y)| 2.0 * (p - y) / t as f64)
                    .collect();
                net.accumulate_grads(tokens, &cache, &d_out, &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            if config.weight_decay > 0.0 {
                for (g, p) in grads.0.iter_mut().zip(net.params()) {
                    for (gi, pi) in g.iter_mut().zip(p) {
                        *gi += config.weight_decay * pi;
                    }
                }
            }
            opt.step(model.network_mut(), &grads);
        }
        let train_mse = train_total / train_idx.len() as f64;
        let val_mse = mean_mse(&model, store, &targets, val_idx)?;
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: if train_mse.is_finite() { val_mse } else { train_mse },
            });
        }
        history.push(EpochRecord {
            epoch,
            train_mse,
            val_mse,
        });
        if val_mse < best.0 {
            best = (val_mse, model.clone());
            best_epoch = epoch;
        } else if epoch - best_epoch >= config.patience {
            break;
        }
    }
    Ok((best.1, history))
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_history_csv(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut out = String::from("epoch,train_mse,val_mse\n");
    for r in history {
        writeln!(out, "{},{},{}", r.epoch, fmt17(r.train_mse), fmt17(r.val_mse)).expect("string write");
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_history_csv(path: &Path) -> Result<Vec<EpochRecord>> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "epoch,train_mse,val_mse")) => {}
        _ => return Err(Error::parse(path, 1, "expected header epoch,train_mse,val_mse")),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let bad = |m: String| Error::parse(path, i + 1, m);
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(bad(format!("expected 3 columns, got {}", cols.len())));
            }
            Ok(EpochRecord {
                epoch: cols[0].parse().map_err(|e| bad(format!("{e}")))?,
                train_mse: cols[1].parse().map_err(|e| bad(format!("{e}")))?,
                val_mse: cols[2].parse().map_err(|e| bad(format!("{e}")))?,
            })
        })
        .collect()
}
