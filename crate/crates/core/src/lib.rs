//! Feature attribution for small text classifiers: Integrated Gradients,
//! Shapley value sampling and exact Shapley values with model-pass
//! accounting, distillation of those explainers into one-pass students, and
//! the accuracy/efficiency evaluation that compares them.

pub mod data;
pub mod distill;
pub mod error;
pub mod eval;
pub mod explainers;
pub mod fsio;
pub mod heatmap;
pub mod models;
pub mod numerics;

pub use data::{Dataset, Instance, Split, Vocab};
pub use error::{Error, Result};
pub use eval::{ConvergenceCurve, Normalization, ObjectiveWeights};
pub use explainers::{Accounting, AttributionMap, CostLedger, ExplainerSpec, Method};
pub use models::{Classifier, EmbeddingClassifier, StudentExplainer, TextClassifier};
pub use numerics::{SeededRng, Tensor};
