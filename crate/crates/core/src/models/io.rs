use std::path::Path;

use serde::{Deserialize, Serialize};

use super::classifier::TextClassifier;
use super::network::{Architecture, Dense, Network};
use super::student::StudentExplainer;
use crate::error::{Error, Result};
use crate::fsio::{read_to_string, sha256_hex, write_atomic};
use crate::numerics::Tensor;

const FORMAT: &str = "attrib-model";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModelKind {
    Classifier,
    Student,
}

#[derive(Debug, Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

/// On-disk model document. Floats are written in shortest round-trip
/// decimal form, so load(save(m)) is bit-exact.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    kind: ModelKind,
    arch: Architecture,
    outputs: usize,
    layer_sizes: Vec<usize>,
    tensors: Vec<NamedTensor>,
    #[serde(default)]
    run_config: serde_json::Value,
}

fn to_file(net: &Network, kind: ModelKind, run_config: serde_json::Value) -> ModelFile {
    let mut tensors = vec![named("embedding", &net.embedding)];
    for (i, layer) in net.layers.iter().enumerate() {
        tensors.push(named(&format!("encoder.{i}.weight"), &layer.weight));
        tensors.push(named(&format!("encoder.{i}.bias"), &layer.bias));
    }
    tensors.push(named("head.weight", &net.head.weight));
    tensors.push(named("head.bias", &net.head.bias));
    let mut layer_sizes = vec![net.arch.encoder_input_dim()];
    layer_sizes.extend(&net.arch.hidden);
    layer_sizes.push(net.outputs());
    ModelFile {
        format: FORMAT.into(),
        version: VERSION,
        kind,
        arch: net.arch.clone(),
        outputs: net.outputs(),
        layer_sizes,
        tensors,
        run_config,
    }
}

fn named(name: &str, t: &Tensor) -> NamedTensor {
    NamedTensor {
        name: name.into(),
        shape: t.shape().to_vec(),
        values: t.values().to_vec(),
    }
}

fn from_file(file: ModelFile, expected: ModelKind, path: &Path) -> Result<Network> {
    let bad = |msg: String| Error::parse(path, 1, msg);
    if file.format != FORMAT || file.version != VERSION {
        return Err(bad(format!("unsupported format {} v{}", file.format, file.version)));
    }
    if file.kind != expected {
        return Err(bad(format!("expected a {expected:?} model, found {:?}", file.kind)));
    }
    file.arch.validate()?;
    let mut tensors = file.tensors.into_iter();
    let mut take = |name: &str, shape: &[usize]| -> Result<Tensor> {
        let t = tensors
            .next()
            .ok_or_else(|| bad(format!("missing tensor {name}")))?;
        if t.name != name || t.shape != shape {
            return Err(bad(format!(
                "expected tensor {name} {shape:?}, found {} {:?}",
                t.name, t.shape
            )));
        }
        Tensor::new(t.shape, t.values)
    };
    let arch = file.arch;
    let embedding = take("embedding", &[arch.vocab_size, arch.embed_dim])?;
    let mut layers = Vec::new();
    let mut width = arch.encoder_input_dim();
    for (i, &h) in arch.hidden.iter().enumerate() {
        let weight = take(&format!("encoder.{i}.weight"), &[h, width])?;
        let bias = take(&format!("encoder.{i}.bias"), &[h])?;
        layers.push(Dense { weight, bias });
        width = h;
    }
    let head = Dense {
        weight: take("head.weight", &[file.outputs, width])?,
        bias: take("head.bias", &[file.outputs])?,
    };
    let net = Network {
        arch,
        embedding,
        layers,
        head,
    };
    if !net.is_finite() {
        return Err(bad("model contains non-finite weights".into()));
    }
    Ok(net)
}

fn save(net: &Network, kind: ModelKind, run_config: serde_json::Value, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string(&to_file(net, kind, run_config))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn load(path: &Path, kind: ModelKind) -> Result<Network> {
    let text = read_to_string(path)?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    from_file(file, kind, path)
}

pub fn save_classifier(f: &TextClassifier, run_config: serde_json::Value, path: &Path) -> Result<()> {
    save(f.network(), ModelKind::Classifier, run_config, path)
}

pub fn load_classifier(path: &Path) -> Result<TextClassifier> {
    Ok(TextClassifier::from_network(load(path, ModelKind::Classifier)?))
}

pub fn save_student(s: &StudentExplainer, run_config: serde_json::Value, path: &Path) -> Result<()> {
    save(s.network(), ModelKind::Student, run_config, path)
}

pub fn load_student(path: &Path) -> Result<StudentExplainer> {
    StudentExplainer::from_network(load(path, ModelKind::Student)?)
}

/// SHA-256 over the serialized weights (run metadata excluded).
pub fn model_checksum(f: &TextClassifier) -> String {
    network_checksum(f.network())
}

pub fn network_checksum(net: &Network) -> String {
    let file = to_file(net, ModelKind::Classifier, serde_json::Value::Null);
    sha256_hex(&serde_json::to_vec(&file.tensors).expect("tensors serialize"))
}
