//! The downstream text classifier and the student explainer that regresses
//! its attribution maps. Both share an embedding + tanh-encoder trunk whose
//! backward pass is derived by hand per layer.

mod classifier;
mod io;
mod network;
mod student;

pub use classifier::{
    argmax, evaluate, predict_class, train_classifier, ClassifierTrainConfig, EpochStats, Metrics,
    TextClassifier,
};
pub use io::{load_classifier, load_student, model_checksum, network_checksum, save_classifier, save_student};
pub use network::{Architecture, Dense, ForwardCache, Grads, Network, Pooling, Sgd};
pub use student::{init_student_from_classifier, StudentExplainer};

use crate::error::Result;
use crate::numerics::Tensor;

/// Anything that maps a token sequence of fixed length to class logits.
pub trait Classifier: Sync {
    fn seq_len(&self) -> usize;
    fn num_classes(&self) -> usize;
    fn logits(&self, tokens: &[u32]) -> Result<Vec<f64>>;
}

/// A classifier whose logits are differentiable w.r.t. its input embeddings.
pub trait EmbeddingClassifier: Classifier {
    fn embed(&self, tokens: &[u32]) -> Result<Tensor>;
    fn logits_embedded(&self, embedded: &Tensor) -> Result<Vec<f64>>;
    /// Gradient of logit `target` with respect to the `T × embed_dim` input.
    fn input_embedding_gradient(&self, embedded: &Tensor, target: usize) -> Result<Tensor>;
}
