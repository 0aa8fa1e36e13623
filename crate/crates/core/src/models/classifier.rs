use serde::{Deserialize, Serialize};

use super::network::{Architecture, Network, Sgd};
use super::{Classifier, EmbeddingClassifier};
use crate::data::{Dataset, Instance};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, SeededRng, Tensor};

/// Embedding-based text classifier `f` producing C logits.
#[derive(Debug, Clone, PartialEq)]
pub struct TextClassifier {
    net: Network,
}

impl TextClassifier {
    pub fn random(arch: Architecture, num_classes: usize, seed: u64) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::config("num_classes must be positive"));
        }
        let mut rng = SeededRng::new(seed);
        Ok(TextClassifier {
            net: Network::random(arch, num_classes, &mut rng)?,
        })
    }

    pub fn zeros(arch: Architecture, num_classes: usize) -> Result<Self> {
        Ok(TextClassifier {
            net: Network::zeros(arch, num_classes)?,
        })
    }

    pub fn from_network(net: Network) -> Self {
        TextClassifier { net }
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn arch(&self) -> &Architecture {
        &self.net.arch
    }

    pub fn forward(&self, tokens: &[u32]) -> Result<Vec<f64>> {
        self.net.forward(tokens)
    }
}

impl Classifier for TextClassifier {
    fn seq_len(&self) -> usize {
        self.net.arch.seq_len
    }

    fn num_classes(&self) -> usize {
        self.net.outputs()
    }

    fn logits(&self, tokens: &[u32]) -> Result<Vec<f64>> {
        self.net.forward(tokens)
    }
}

impl EmbeddingClassifier for TextClassifier {
    fn embed(&self, tokens: &[u32]) -> Result<Tensor> {
        self.net.embed(tokens)
    }

    fn logits_embedded(&self, embedded: &Tensor) -> Result<Vec<f64>> {
        self.net.forward_embedded(embedded)
    }

    fn input_embedding_gradient(&self, embedded: &Tensor, target: usize) -> Result<Tensor> {
        let classes = self.num_classes();
        if target >= classes {
            return Err(Error::ClassOutOfRange {
                class: target,
                num_classes: classes,
            });
        }
        let cache = self.net.forward_embedded_cached(embedded)?;
        let mut d_out = vec![0.0; classes];
        d_out[target] = 1.0;
        let grad = self.net.input_gradient(&cache, &d_out);
        if let Some(pos) = grad.iter().position(|g| !g.is_finite()) {
            let d = self.net.arch.embed_dim;
            return Err(Error::NonFinite {
                context: format!(
                    "input gradient of class {target} at token {} dim {} (logits {:?})",
                    pos / d,
                    pos % d,
                    cache.output
                ),
            });
        }
        Tensor::new(embedded.shape().to_vec(), grad)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict_class<C: Classifier + ?Sized>(f: &C, tokens: &[u32]) -> Result<usize> {
    Ok(argmax(&f.logits(tokens)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierTrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// L2 penalty coefficient added to every parameter gradient.
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for ClassifierTrainConfig {
    fn default() -> Self {
        ClassifierTrainConfig {
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 32,
            epochs: 30,
            weight_decay: 0.001,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub weighted_f1: f64,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Trains with softmax cross-entropy and momentum SGD for a fixed number of
/// epochs and returns the parameters of the epoch with the best validation
/// accuracy (the last epoch when there is no validation split).
pub fn train_classifier(
    arch: Architecture,
    num_classes: usize,
    dataset: &Dataset,
    config: &ClassifierTrainConfig,
) -> Result<(TextClassifier, Vec<EpochStats>)> {
    if config.batch_size == 0 || config.learning_rate <= 0.0 || config.weight_decay < 0.0 {
        return Err(Error::config(
            "batch_size and learning_rate must be positive, weight_decay non-negative",
        ));
    }
    if dataset.train.is_empty() {
        return Err(Error::config("training split is empty"));
    }
    if let Some(bad) = dataset.all().find(|i| i.label >= num_classes) {
        return Err(Error::ClassOutOfRange {
            class: bad.label,
            num_classes,
        });
    }
    let mut model = TextClassifier::random(arch, num_classes, derive_seed(config.seed, 0))?;
    let mut order_rng = SeededRng::new(derive_seed(config.seed, 1));
    let mut opt = Sgd::new(&model.net, config.learning_rate, config.momentum);
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, TextClassifier)> = None;

    for epoch in 1..=config.epochs {
        order_rng.shuffle(&mut order);
        let mut total_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = model.net.zero_grads();
            for &idx in batch {
                let inst = &dataset.train[idx];
                let cache = model
                    .net
                    .forward_embedded_cached(&model.net.embed(&inst.tokens)?)?;
                let mut d_out = softmax(&cache.output);
                total_loss -= d_out[inst.label].max(f64::MIN_POSITIVE).ln();
                d_out[inst.label] -= 1.0;
                model.net.accumulate_grads(&inst.tokens, &cache, &d_out, &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            if config.weight_decay > 0.0 {
                for (g, p) in grads.0.iter_mut().zip(model.net.params()) {
                    for (gi, pi) in g.iter_mut().zip(p) {
                        *gi += config.weight_decay * pi;
                    }
                }
            }
            opt.step(&mut model.net, &grads);
        }
        let train_loss = total_loss / dataset.train.len() as f64;
        if !train_loss.is_finite() || !model.net.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: train_loss,
            });
        }
        let validation_accuracy = if dataset.validation.is_empty() {
            f64::NAN
        } else {
            evaluate(&model, &dataset.validation)?.accuracy
        };
        history.push(EpochStats {
            epoch,
            train_loss,
            validation_accuracy,
        });
        if !validation_accuracy.is_nan() && best.as_ref().is_none_or(|(a, _)| validation_accuracy > *a) {
            best = Some((validation_accuracy, model.clone()));
        }
    }
    Ok((best.map_or(model, |(_, m)| m), history))
}

/// Accuracy and support-weighted F1 against the stored labels.
pub fn evaluate<C: Classifier + ?Sized>(f: &C, instances: &[Instance]) -> Result<Metrics> {
    let classes = f.num_classes();
    let mut confusion = vec![vec![0usize; classes]; classes];
    for inst in instances {
        let pred = predict_class(f, &inst.tokens)?;
        if inst.label >= classes {
            return Err(Error::ClassOutOfRange {
                class: inst.label,
                num_classes: classes,
            });
        }
        confusion[inst.label][pred] += 1;
    }
    let total = instances.len().max(1) as f64;
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    let mut weighted_f1 = 0.0;
    for c in 0..classes {
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[c]).sum();
        let tp = confusion[c][c] as f64;
        let f1 = if support + predicted == 0 {
            0.0
        } else {
            2.0 * tp / (support + predicted) as f64
        };
        weighted_f1 += f1 * support as f64 / total;
    }
    Ok(Metrics {
        accuracy: correct as f64 / total,
        weighted_f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Pooling;
    use crate::numerics::{finite_diff_gradient, max_relative_error};

    #[test]
    fn partial_config_keeps_defaults() {
        let c: ClassifierTrainConfig = serde_json::from_str(r#"{"epochs": 4}"#).unwrap();
        assert_eq!(c.epochs, 4);
        assert_eq!(c.weight_decay, ClassifierTrainConfig::default().weight_decay);
    }

    fn arch(pooling: Pooling, hidden: Vec<usize>) -> Architecture {
        Architecture {
            vocab_size: 20,
            seq_len: 6,
            embed_dim: 4,
            hidden,
            pooling,
        }
    }

    #[test]
    fn argmax_tie_breaks_low() {
        assert_eq!(argmax(&[0.1, 0.9]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[-1.0, 2.0, 2.0]), 1);
    }

    #[test]
    fn zero_model_gives_equal_logits() {
        let f = TextClassifier::zeros(arch(Pooling::Mean, vec![3]), 3).unwrap();
        let logits = f.forward(&[0; 6]).unwrap();
        assert!(logits.iter().all(|&l| l == logits[0]));
        assert_eq!(predict_class(&f, &[0; 6]).unwrap(), 0);
    }

    #[test]
    fn forward_is_deterministic() {
        let a = TextClassifier::random(arch(Pooling::Flatten, vec![5]), 2, 4).unwrap();
        let b = TextClassifier::random(arch(Pooling::Flatten, vec![5]), 2, 4).unwrap();
        let tokens = [1, 3, 4, 2, 0, 0];
        assert_eq!(
            a.forward(&tokens).unwrap().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.forward(&tokens).unwrap().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn rejects_out_of_vocabulary() {
        let f = TextClassifier::random(arch(Pooling::Mean, vec![]), 2, 0).unwrap();
        let err = f.forward(&[1, 3, 25, 2, 0, 0]).unwrap_err();
        assert!(matches!(err, Error::OutOfVocabulary { id: 25, position: 2, .. }));
        assert!(f.forward(&[1, 2]).is_err());
    }

    #[test]
    fn embedding_rows() {
        let f = TextClassifier::random(arch(Pooling::Flatten, vec![3]), 2, 1).unwrap();
        let a = f.embed(&[1, 7, 4, 2, 0, 0]).unwrap();
        let b = f.embed(&[1, 9, 4, 3, 2, 0]).unwrap();
        assert_eq!(a.row(2), b.row(2));
        assert_eq!(a.row(5), f.network().embedding.row(0));
        let tokens = [1, 7, 4, 2, 0, 0];
        assert_eq!(f.logits_embedded(&a).unwrap(), f.forward(&tokens).unwrap());
    }

    #[test]
    fn linear_model_gradient_is_weight_rows() {
        let f = TextClassifier::random(arch(Pooling::Flatten, vec![]), 3, 5).unwrap();
        for tokens in [[1u32, 2, 3, 4, 5, 6], [0, 0, 0, 9, 9, 9]] {
            let e = f.embed(&tokens).unwrap();
            let g = f.input_embedding_gradient(&e, 2).unwrap();
            assert_eq!(g.values(), f.network().head.weight.row(2));
        }
    }

    #[test]
    fn zero_head_row_gives_zero_gradient() {
        let mut f = TextClassifier::random(arch(Pooling::Mean, vec![]), 2, 5).unwrap();
        f.network_mut().head.weight.row_mut(1).fill(0.0);
        let e = f.embed(&[1, 2, 3, 4, 5, 6]).unwrap();
        let g = f.input_embedding_gradient(&e, 1).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        for pooling in [Pooling::Mean, Pooling::Flatten] {
            let f = TextClassifier::random(arch(pooling, vec![8, 5]), 2, 21).unwrap();
            let mut rng = SeededRng::new(3);
            for _ in 0..20 {
                let tokens: Vec<u32> = (0..6).map(|_| rng.below(20) as u32).collect();
                let e = f.embed(&tokens).unwrap();
                let target = rng.below(2) as usize;
                let analytic = f.input_embedding_gradient(&e, target).unwrap();
                let numeric =
                    finite_diff_gradient(|x| f.logits_embedded(x).unwrap()[target], &e, 1e-4).unwrap();
                let err = max_relative_error(analytic.values(), numeric.values(), 1e-3);
                assert!(err <= 1e-4, "{pooling:?}: {err}");
            }
        }
    }

    #[test]
    fn target_out_of_range() {
        let f = TextClassifier::random(arch(Pooling::Mean, vec![]), 2, 0).unwrap();
        let e = f.embed(&[0; 6]).unwrap();
        assert!(f.input_embedding_gradient(&e, 2).is_err());
    }

    #[test]
    fn mean_pool_is_order_invariant_flatten_is_not() {
        let tokens = [1u32, 5, 9, 13, 2, 0];
        let permuted = [1u32, 13, 5, 9, 2, 0];
        let mean = TextClassifier::random(arch(Pooling::Mean, vec![4]), 2, 9).unwrap();
        let a = mean.forward(&tokens).unwrap();
        let b = mean.forward(&permuted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let flat = TextClassifier::random(arch(Pooling::Flatten, vec![4]), 2, 9).unwrap();
        assert_ne!(flat.forward(&tokens).unwrap(), flat.forward(&permuted).unwrap());
    }

    #[test]
    fn weighted_f1_hand_computed() {
        // a model that always predicts class 0 on a 3:1 split
        let f = TextClassifier::zeros(arch(Pooling::Mean, vec![]), 2).unwrap();
        let mk = |label| Instance {
            id: 0,
            tokens: vec![0; 6],
            label,
            mask: vec![true; 6],
        };
        let m = evaluate(&f, &[mk(0), mk(0), mk(0), mk(1)]).unwrap();
        assert!((m.accuracy - 0.75).abs() < 1e-15);
        // class 0: P=0.75 R=1 F1=6/7, weight 0.75; class 1: F1=0
        assert!((m.weighted_f1 - 0.75 * 6.0 / 7.0).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn argmax_shift_invariant(values in proptest::collection::vec(-5.0f64..5.0, 1..6), shift in -3.0f64..3.0) {
            let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
            // exact shifts can merge near-ties through rounding; only compare clear winners
            let best = argmax(&values);
            let runner_up = values.iter().enumerate().filter(|(i, _)| *i != best).map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
            proptest::prop_assume!(values[best] - runner_up > 1e-9);
            proptest::prop_assert_eq!(argmax(&shifted), best);
        }

        #[test]
        fn predict_class_is_argmax_of_forward(seed: u64, toks in proptest::collection::vec(0u32..20, 6)) {
            let f = TextClassifier::random(arch(Pooling::Flatten, vec![3]), 3, seed).unwrap();
            proptest::prop_assert_eq!(predict_class(&f, &toks).unwrap(), argmax(&f.forward(&toks).unwrap()));
        }
    }
}
