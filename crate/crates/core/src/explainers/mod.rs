//! Expensive explainers (Integrated Gradients, Shapley Value Sampling), the
//! exact coalition-enumeration oracle, the one-pass empirical explainer, and
//! model-pass accounting.

mod attribution;
mod baseline;
mod empirical;
mod ig;
mod jsonl;
mod shapley;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use attribution::{Accounting, AttributionMap, CostLedger, Method};
pub use baseline::{build_baseline, group_features, Baseline, FeatureGrouping};
pub use empirical::{empirical_explain, empirical_explain_split};
pub use ig::integrated_gradients;
pub use jsonl::{read_attributions, write_attributions, AttributionFile};
pub use shapley::{exact_shapley, shapley_value_sampling, SamplingPlan, EXACT_SHAPLEY_MAX_FEATURES};

use crate::data::Instance;
use crate::error::{Error, Result};
use crate::models::{predict_class, EmbeddingClassifier};
use crate::numerics::derive_seed;

/// Which expensive explainer to run and how to account for its cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplainerSpec {
    pub method: Method,
    pub samples: usize,
    pub accounting: Accounting,
    pub pad_id: u32,
}

impl ExplainerSpec {
    pub fn new(method: Method, samples: usize) -> Self {
        ExplainerSpec {
            method,
            samples,
            accounting: Accounting::Actual,
            pad_id: 0,
        }
    }

    pub fn with_accounting(mut self, accounting: Accounting) -> Self {
        self.accounting = accounting;
        self
    }

    pub fn with_pad_id(mut self, pad_id: u32) -> Self {
        self.pad_id = pad_id;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }
}

/// Explains one instance for `target` (default: the predicted class) with a
/// pad-substituted baseline and special tokens grouped into one feature.
pub fn explain_instance<F: EmbeddingClassifier + ?Sized>(
    f: &F,
    spec: &ExplainerSpec,
    instance: &Instance,
    seed: u64,
    target: Option<usize>,
) -> Result<AttributionMap> {
    let target = match target {
        Some(t) => t,
        None => predict_class(f, &instance.tokens)?,
    };
    let baseline = build_baseline(&instance.tokens, &instance.mask, spec.pad_id)?;
    match spec.method {
        Method::Ig => {
            let mut map = integrated_gradients(f, instance, &baseline, spec.samples, target)?;
            map.seed = seed;
            map.accounting = spec.accounting;
            Ok(map)
        }
        Method::Svs => {
            let grouping = group_features(&instance.mask)?;
            let plan = SamplingPlan::draw(grouping.n_features(), spec.samples, seed)?;
            shapley_value_sampling(f, instance, &baseline, &grouping, &plan, target, spec.accounting)
        }
        Method::ExactShapley => {
            let grouping = group_features(&instance.mask)?;
            let mut map = exact_shapley(f, instance, &baseline, &grouping, target)?;
            map.seed = seed;
            map.accounting = spec.accounting;
            Ok(map)
        }
        Method::Empirical => Err(Error::config(
            "the empirical explainer needs a trained student, not a classifier",
        )),
    }
}

/// Explains every instance with seed `derive_seed(base_seed, id)`, in
/// parallel; output order follows `instances`.
pub fn explain_split<F: EmbeddingClassifier + ?Sized>(
    f: &F,
    spec: &ExplainerSpec,
    instances: &[Instance],
    base_seed: u64,
) -> Result<Vec<AttributionMap>> {
    instances
        .par_iter()
        .map(|inst| {
            explain_instance(f, spec, inst, derive_seed(base_seed, inst.id), None).map_err(|e| {
                Error::Instance {
                    id: inst.id,
                    source: Box::new(e),
                }
            })
        })
        .collect()
}
