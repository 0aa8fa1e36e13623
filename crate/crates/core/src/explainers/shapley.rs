use super::{Accounting, AttributionMap, Baseline, FeatureGrouping, Method};
use crate::data::Instance;
use crate::error::{Error, Result};
use crate::models::Classifier;
use crate::numerics::{sample_permutation, SeededRng};

/// Coalition enumeration costs `2^n` forward passes; 15 features is 32 768.
pub const EXACT_SHAPLEY_MAX_FEATURES: usize = 15;

/// The permutations `O_1..O_s` over features used by Shapley sampling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPlan {
    pub seed: u64,
    n_features: usize,
    permutations: Vec<Vec<usize>>,
}

impl SamplingPlan {
    /// Draws `samples` Fisher-Yates permutations from `SeededRng::new(seed)`.
    pub fn draw(n_features: usize, samples: usize, seed: u64) -> Result<Self> {
        if n_features == 0 || samples == 0 {
            return Err(Error::config("sampling plan needs n >= 1 and s >= 1"));
        }
        let mut rng = SeededRng::new(seed);
        let permutations = (0..samples)
            .map(|_| sample_permutation(&mut rng, n_features))
            .collect();
        Ok(SamplingPlan {
            seed,
            n_features,
            permutations,
        })
    }

    /// Uses explicit permutations, e.g. all `n!` orderings.
    pub fn from_permutations(n_features: usize, permutations: Vec<Vec<usize>>) -> Result<Self> {
        if n_features == 0 || permutations.is_empty() {
            return Err(Error::config("sampling plan needs n >= 1 and s >= 1"));
        }
        for perm in &permutations {
            let mut seen = vec![false; n_features];
            if perm.len() != n_features
                || perm.iter().any(|&i| i >= n_features || std::mem::replace(&mut seen[i], true))
            {
                return Err(Error::config(format!("{perm:?} is not a permutation of 0..{n_features}")));
            }
        }
        Ok(SamplingPlan {
            seed: 0,
            n_features,
            permutations,
        })
    }

    /// All `n!` permutations in lexicographic order.
    pub fn exhaustive(n_features: usize) -> Result<Self> {
        fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
            if prefix.len() == used.len() {
                out.push(prefix.clone());
                return;
            }
            for i in 0..used.len() {
                if !used[i] {
                    used[i] = true;
                    prefix.push(i);
                    extend(prefix, used, out);
                    prefix.pop();
                    used[i] = false;
                }
            }
        }
        let mut out = Vec::new();
        extend(&mut Vec::new(), &mut vec![false; n_features], &mut out);
        Self::from_permutations(n_features, out)
    }

    pub fn samples(&self) -> usize {
        self.permutations.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.permutations
    }
}

fn check_inputs<F: Classifier + ?Sized>(
    f: &F,
    instance: &Instance,
    baseline: &Baseline,
    grouping: &FeatureGrouping,
    target: usize,
) -> Result<()> {
    if target >= f.num_classes() {
        return Err(Error::ClassOutOfRange {
            class: target,
            num_classes: f.num_classes(),
        });
    }
    let t = instance.tokens.len();
    if baseline.tokens.len() != t || grouping.len() != t {
        return Err(Error::ShapeMismatch {
            op: "shapley",
            detail: format!(
                "instance {t} tokens, baseline {}, grouping {}",
                baseline.tokens.len(),
                grouping.len()
            ),
        });
    }
    Ok(())
}

/// Permutation-sampling Shapley estimate on token ids.
///
/// Each permutation walks from the baseline to the full input, switching
/// one feature group to its input tokens at a time and crediting the change
/// in the target logit to that feature. `f(baseline)` and `f(input)` are
/// evaluated once and shared by every chain, so `s * (n - 1) + 2` forward
/// passes are performed; paper accounting reports `s * n`.
pub fn shapley_value_sampling<F: Classifier + ?Sized>(
    f: &F,
    instance: &Instance,
    baseline: &Baseline,
    grouping: &FeatureGrouping,
    plan: &SamplingPlan,
    target: usize,
    accounting: Accounting,
) -> Result<AttributionMap> {
    check_inputs(f, instance, baseline, grouping, target)?;
    let n = grouping.n_features();
    if plan.n_features() != n {
        return Err(Error::config(format!(
            "plan is over {} features, grouping has {n}",
            plan.n_features()
        )));
    }
    let value_of_base = f.logits(&baseline.tokens)?[target];
    let value_of_full = f.logits(&instance.tokens)?[target];
    let mut performed = 2u64;

    let mut totals = vec![0.0; n];
    let mut state = baseline.tokens.clone();
    for perm in plan.permutations() {
        state.copy_from_slice(&baseline.tokens);
        let mut prev = value_of_base;
        for (step, &feature) in perm.iter().enumerate() {
            for &pos in grouping.members(feature) {
                state[pos] = instance.tokens[pos];
            }
            let value = if step + 1 == n {
                value_of_full
            } else {
                performed += 1;
                f.logits(&state)?[target]
            };
            totals[feature] += value - prev;
            prev = value;
        }
    }
    let s = plan.samples() as f64;
    let feature_scores: Vec<f64> = totals.iter().map(|t| t / s).collect();
    let fwd_passes = match accounting {
        Accounting::Actual => performed,
        Accounting::Paper => (plan.samples() * n) as u64,
    };
    Ok(AttributionMap {
        id: instance.id,
        method: Method::Svs,
        samples: plan.samples(),
        seed: plan.seed,
        target_class: Some(target),
        tokens: instance.tokens.clone(),
        scores: grouping.broadcast(&feature_scores),
        fwd_passes,
        bwd_passes: 0,
        accounting,
    })
}

/// Exact Shapley values by enumerating all `2^n` coalitions; features outside
/// a coalition keep their baseline tokens.
pub fn exact_shapley<F: Classifier + ?Sized>(
    f: &F,
    instance: &Instance,
    baseline: &Baseline,
    grouping: &FeatureGrouping,
    target: usize,
) -> Result<AttributionMap> {
    check_inputs(f, instance, baseline, grouping, target)?;
    let n = grouping.n_features();
    if n > EXACT_SHAPLEY_MAX_FEATURES {
        return Err(Error::TooManyFeatures {
            n,
            cap: EXACT_SHAPLEY_MAX_FEATURES,
        });
    }
    let coalitions = 1usize << n;
    let mut values = Vec::with_capacity(coalitions);
    let mut state = baseline.tokens.clone();
    for mask in 0..coalitions {
        state.copy_from_slice(&baseline.tokens);
        for feature in (0..n).filter(|i| mask >> i & 1 == 1) {
            for &pos in grouping.members(feature) {
                state[pos] = instance.tokens[pos];
            }
        }
        values.push(f.logits(&state)?[target]);
    }

    // weight(k) = k! (n - k - 1)! / n!
    let mut factorial = vec![1.0f64; n + 1];
    for k in 1..=n {
        factorial[k] = factorial[k - 1] * k as f64;
    }
    let weight: Vec<f64> = (0..n)
        .map(|k| factorial[k] * factorial[n - k - 1] / factorial[n])
        .collect();
    let mut feature_scores = vec![0.0; n];
    for (i, score) in feature_scores.iter_mut().enumerate() {
        let bit = 1usize << i;
        for mask in (0..coalitions).filter(|m| m & bit == 0) {
            let k = mask.count_ones() as usize;
            *score += weight[k] * (values[mask | bit] - values[mask]);
        }
    }
    Ok(AttributionMap {
        id: instance.id,
        method: Method::ExactShapley,
        samples: 0,
        seed: 0,
        target_class: Some(target),
        tokens: instance.tokens.clone(),
        scores: grouping.broadcast(&feature_scores),
        fwd_passes: coalitions as u64,
        bwd_passes: 0,
        accounting: Accounting::Actual,
    })
}
