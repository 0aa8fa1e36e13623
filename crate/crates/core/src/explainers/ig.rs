use super::{AttributionMap, Baseline, Method};
use crate::data::Instance;
use crate::error::{Error, Result};
use crate::models::EmbeddingClassifier;
use crate::numerics::Tensor;

/// Integrated Gradients in embedding space with a right-endpoint Riemann sum:
///
/// `phi_(i,d) = (x_(i,d) - xb_(i,d)) / s * sum_(k=1..s) dF(xb + k/s (x - xb)) / dx_(i,d)`
///
/// projected onto tokens by summing over the embedding dimension. Costs `s`
/// forward and `s` backward passes.
pub fn integrated_gradients<F: EmbeddingClassifier + ?Sized>(
    f: &F,
    instance: &Instance,
    baseline: &Baseline,
    samples: usize,
    target: usize,
) -> Result<AttributionMap> {
    if samples == 0 {
        return Err(Error::config("integrated gradients needs at least one sample"));
    }
    if target >= f.num_classes() {
        return Err(Error::ClassOutOfRange {
            class: target,
            num_classes: f.num_classes(),
        });
    }
    let input = f.embed(&instance.tokens)?;
    let reference = f.embed(&baseline.tokens)?;
    let delta: Vec<f64> = input
        .values()
        .iter()
        .zip(reference.values())
        .map(|(x, b)| x - b)
        .collect();

    let mut grad_sum = vec![0.0; delta.len()];
    let mut point = Tensor::zeros(input.shape());
    for k in 1..=samples {
        let alpha = k as f64 / samples as f64;
        for ((p, &b), &d) in point.values_mut().iter_mut().zip(reference.values()).zip(&delta) {
            *p = b + alpha * d;
        }
        let grad = f.input_embedding_gradient(&point, target)?;
        for (acc, g) in grad_sum.iter_mut().zip(grad.values()) {
            *acc += g;
        }
    }

    let dim = input.cols();
    let scale = 1.0 / samples as f64;
    let scores: Vec<f64> = delta
        .chunks_exact(dim)
        .zip(grad_sum.chunks_exact(dim))
        .map(|(d_row, g_row)| d_row.iter().zip(g_row).map(|(d, g)| d * g).sum::<f64>() * scale)
        .collect();
    if let Some(pos) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("integrated gradients score at token {pos}"),
        });
    }
    Ok(AttributionMap {
        id: instance.id,
        method: Method::Ig,
        samples,
        seed: 0,
        target_class: Some(target),
        tokens: instance.tokens.clone(),
        scores,
        fwd_passes: samples as u64,
        bwd_passes: samples as u64,
        accounting: Default::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explainers::build_baseline;
    use crate::models::{Architecture, Classifier, Pooling, TextClassifier};
    use crate::numerics::SeededRng;

    fn model(hidden: Vec<usize>, pooling: Pooling, seed: u64) -> TextClassifier {
        let arch = Architecture {
            vocab_size: 30,
            seq_len: 8,
            embed_dim: 4,
            hidden,
            pooling,
        };
        TextClassifier::random(arch, 2, seed).unwrap()
    }

    fn instance(rng: &mut SeededRng, id: u64) -> Instance {
        let mut tokens = vec![1u32];
        for _ in 0..5 {
            tokens.push(3 + rng.below(27) as u32);
        }
        tokens.extend([2, 0]);
        let mask = tokens.iter().map(|&t| t < 3).collect();
        Instance {
            id,
            tokens,
            label: 0,
            mask,
        }
    }

    #[test]
    fn self_baseline_gives_zero() {
        let f = model(vec![6], Pooling::Flatten, 2);
        let inst = instance(&mut SeededRng::new(1), 0);
        let base = Baseline {
            tokens: inst.tokens.clone(),
        };
        for s in [1, 5] {
            let map = integrated_gradients(&f, &inst, &base, s, 1).unwrap();
            assert!(map.scores.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn linear_model_is_exact_for_any_s() {
        let f = model(vec![], Pooling::Flatten, 3);
        let mut rng = SeededRng::new(4);
        let inst = instance(&mut rng, 7);
        let base = build_baseline(&inst.tokens, &inst.mask, 0).unwrap();
        let x = f.embed(&inst.tokens).unwrap();
        let xb = f.embed(&base.tokens).unwrap();
        let w = f.network().head.weight.row(1);
        let d = x.cols();
        let expected: Vec<f64> = (0..x.rows())
            .map(|i| (0..d).map(|j| w[i * d + j] * (x.get(i, j) - xb.get(i, j))).sum())
            .collect();
        let gap = f.logits(&inst.tokens).unwrap()[1] - f.logits(&base.tokens).unwrap()[1];
        for s in [1, 7, 20] {
            let map = integrated_gradients(&f, &inst, &base, s, 1).unwrap();
            for (a, b) in map.scores.iter().zip(&expected) {
                assert!((a - b).abs() <= 1e-12);
            }
            let total: f64 = map.scores.iter().sum();
            assert!((total - gap).abs() <= 1e-12);
            assert_eq!((map.fwd_passes, map.bwd_passes), (s as u64, s as u64));
        }
    }

    #[test]
    fn error_shrinks_first_order() {
        let f = model(vec![6, 5], Pooling::Flatten, 9);
        let mut rng = SeededRng::new(5);
        for id in 0..3 {
            let inst = instance(&mut rng, id);
            let base = build_baseline(&inst.tokens, &inst.mask, 0).unwrap();
            let reference = integrated_gradients(&f, &inst, &base, 100_000, 0).unwrap();
            let err = |s: usize| {
                let m = integrated_gradients(&f, &inst, &base, s, 0).unwrap();
                m.scores.iter().zip(&reference.scores).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            };
            let (e20, e40, e400) = (err(20), err(40), err(400));
            assert!(e400 < 0.2 * e20, "{e20} {e400}");
            assert!((1.5..2.5).contains(&(e20 / e40)), "{e20} {e40}");
        }
    }

    #[test]
    fn rejects_zero_samples_and_bad_target() {
        let f = model(vec![], Pooling::Mean, 1);
        let inst = instance(&mut SeededRng::new(1), 0);
        let base = build_baseline(&inst.tokens, &inst.mask, 0).unwrap();
        assert!(integrated_gradients(&f, &inst, &base, 0, 0).is_err());
        assert!(integrated_gradients(&f, &inst, &base, 3, 2).is_err());
    }
}
