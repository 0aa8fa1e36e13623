use super::classifier::TextClassifier;
use super::network::{Architecture, Dense, Network};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// Empirical explainer: the classifier's trunk with a T-output regression head.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentExplainer {
    net: Network,
}

impl StudentExplainer {
    /// Fully random initialization, used as the comparison point for the
    /// encoder-copy initialization.
    pub fn random(arch: Architecture, seed: u64) -> Result<Self> {
        let outputs = arch.seq_len;
        let mut rng = SeededRng::new(seed);
        Ok(StudentExplainer {
            net: Network::random(arch, outputs, &mut rng)?,
        })
    }

    pub fn from_network(net: Network) -> Result<Self> {
        if net.outputs() != net.arch.seq_len {
            return Err(Error::ShapeMismatch {
                op: "StudentExplainer::from_network",
                detail: format!("head has {} outputs, T is {}", net.outputs(), net.arch.seq_len),
            });
        }
        Ok(StudentExplainer { net })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn seq_len(&self) -> usize {
        self.net.arch.seq_len
    }

    /// One attribution score per position, pads included.
    pub fn student_forward(&self, tokens: &[u32]) -> Result<Vec<f64>> {
        self.net.forward(tokens)
    }
}

/// Copies the classifier's embedding table and encoder and puts a freshly
/// initialized T-output head on top.
pub fn init_student_from_classifier(f: &TextClassifier, seed: u64) -> StudentExplainer {
    let src = f.network();
    let mut rng = SeededRng::new(seed);
    let head = Dense::random(src.arch.encoder_output_dim(), src.arch.seq_len, &mut rng);
    StudentExplainer {
        net: Network {
            arch: src.arch.clone(),
            embedding: src.embedding.clone(),
            layers: src.layers.clone(),
            head,
        },
    }
}
