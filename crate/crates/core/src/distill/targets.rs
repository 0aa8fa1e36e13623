use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::Instance;
use crate::error::{Error, Result};
use crate::explainers::{explain_split, read_attributions, write_attributions, AttributionMap, ExplainerSpec, Method};
use crate::fsio::{read_to_string, write_atomic};
use crate::models::{model_checksum, TextClassifier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMeta {
    pub method: Method,
    pub samples: usize,
    pub seed: u64,
    pub classifier_checksum: String,
    /// Every map explains the classifier's predicted class.
    pub class_policy: String,
    pub count: usize,
    #[serde(default)]
    pub run_config: serde_json::Value,
}

/// Expensive attribution maps serving as regression targets, one per instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetStore {
    pub meta: TargetMeta,
    pub maps: Vec<AttributionMap>,
}

impl TargetStore {
    pub fn new(meta: TargetMeta, maps: Vec<AttributionMap>) -> Result<Self> {
        let mut ids = HashSet::new();
        for m in &maps {
            if !ids.insert(m.id) {
                return Err(Error::InstanceMismatch(format!("duplicate target id {}", m.id)));
            }
            if m.method != meta.method || m.samples != meta.samples {
                return Err(Error::InstanceMismatch(format!(
                    "target {} is {} s={}, store is {} s={}",
                    m.id, m.method, m.samples, meta.method, meta.samples
                )));
            }
        }
        Ok(TargetStore { meta, maps })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn seq_len(&self) -> Option<usize> {
        self.maps.first().map(|m| m.tokens.len())
    }
}

/// Explains the predicted class of every instance in `split`; gold labels
/// are never read.
pub fn generate_targets(
    f: &TextClassifier,
    spec: &ExplainerSpec,
    split: &[Instance],
    base_seed: u64,
) -> Result<TargetStore> {
    if split.is_empty() {
        return Err(Error::config("cannot generate targets for an empty split"));
    }
    let maps = explain_split(f, spec, split, base_seed)?;
    let meta = TargetMeta {
        method: spec.method,
        samples: spec.samples,
        seed: base_seed,
        classifier_checksum: model_checksum(f),
        class_policy: "predicted".into(),
        count: maps.len(),
        run_config: serde_json::Value::Null,
    };
    TargetStore::new(meta, maps)
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Writes the maps as attribution JSONL plus `<path>.meta.json`. Loading
/// prefers the sidecar, then the JSONL header line.
pub fn save_target_store(store: &TargetStore, path: &Path) -> Result<()> {
    let header = serde_json::to_value(&store.meta)?;
    write_attributions(path, Some(header), &store.maps)?;
    let mut meta = serde_json::to_string_pretty(&store.meta)?;
    meta.push('\n');
    write_atomic(&sidecar_path(path), meta.as_bytes())
}

pub fn load_target_store(path: &Path) -> Result<TargetStore> {
    let file = read_attributions(path)?;
    let sidecar = sidecar_path(path);
    let meta: TargetMeta = if sidecar.exists() {
        serde_json::from_str(&read_to_string(&sidecar)?)
            .map_err(|e| Error::parse(&sidecar, e.line(), e.to_string()))?
    } else if let Some(header) = file.header {
        serde_json::from_value(header).map_err(|e| Error::parse(path, 1, format!("header: {e}")))?
    } else {
        let first = file
            .maps
            .first()
            .ok_or_else(|| Error::parse(path, 1, "no attribution records"))?;
        TargetMeta {
            method: first.method,
            samples: first.samples,
            seed: 0,
            classifier_checksum: String::new(),
            class_policy: "predicted".into(),
            count: file.maps.len(),
            run_config: serde_json::Value::Null,
        }
    };
    if meta.count != file.maps.len() {
        return Err(Error::parse(
            path,
            file.maps.len() + 1,
            format!("metadata lists {} maps, file has {}", meta.count, file.maps.len()),
        ));
    }
    TargetStore::new(meta, file.maps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_keyword_task, KeywordTaskConfig};
    use crate::models::{Architecture, Pooling};

    fn setup() -> (TextClassifier, Vec<Instance>) {
        let ds = gen_keyword_task(&KeywordTaskConfig {
            seed: 5,
            train_size: 8,
            validation_size: 1,
            test_size: 1,
            seq_len: 10,
            ..Default::default()
        })
        .unwrap();
        let arch = Architecture {
            vocab_size: 100,
            seq_len: 10,
            embed_dim: 4,
            hidden: vec![6],
            pooling: Pooling::Flatten,
        };
        (TextClassifier::random(arch, 2, 3).unwrap(), ds.train)
    }

    #[test]
    fn empty_split_is_an_error() {
        let (f, _) = setup();
        assert!(generate_targets(&f, &ExplainerSpec::new(Method::Ig, 5), &[], 0).is_err());
    }

    #[test]
    fn rerun_is_byte_identical() {
        let (f, split) = setup();
        let spec = ExplainerSpec::new(Method::Svs, 4);
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
        save_target_store(&generate_targets(&f, &spec, &split, 11).unwrap(), &a).unwrap();
        save_target_store(&generate_targets(&f, &spec, &split, 11).unwrap(), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let loaded = load_target_store(&a).unwrap();
        assert_eq!(loaded, generate_targets(&f, &spec, &split, 11).unwrap());
    }

    #[test]
    fn explains_predicted_class_not_label() {
        let (f, mut split) = setup();
        for inst in &mut split {
            inst.label = 1 - inst.label;
        }
        let flipped = generate_targets(&f, &ExplainerSpec::new(Method::Ig, 3), &split, 0).unwrap();
        let (_, original) = setup();
        let plain = generate_targets(&f, &ExplainerSpec::new(Method::Ig, 3), &original, 0).unwrap();
        assert_eq!(flipped.maps, plain.maps);
    }
}
