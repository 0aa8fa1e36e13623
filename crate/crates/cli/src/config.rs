use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use attrib_core::data::{KeywordTaskConfig, Split};
use attrib_core::distill::TrainConfig;
use attrib_core::models::{ClassifierTrainConfig, Pooling};
use attrib_core::{Accounting, Method, Normalization};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    pub embed_dim: usize,
    pub hidden: Vec<usize>,
    pub pooling: Pooling,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            embed_dim: 4,
            hidden: vec![64],
            pooling: Pooling::Flatten,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudentInit {
    /// Embedding and encoder copied from the classifier.
    #[default]
    Copy,
    Random,
}

/// Every parameter of a run. Values come from defaults, then the JSON config
/// file, then command-line flags; the resolved result is embedded in each
/// artifact. The top-level `seed` overrides the seeds of the nested sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub dataset: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub student: Option<PathBuf>,
    pub targets: Option<PathBuf>,
    pub empirical: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub method: Method,
    pub samples: usize,
    pub accounting: Accounting,
    pub normalization: Normalization,
    pub alpha: f64,
    pub split: Split,
    /// Use only the first `limit` instances of the split.
    pub limit: Option<usize>,
    pub s_values: Vec<usize>,
    pub s_reference: usize,
    pub repeats: usize,
    pub student_init: StudentInit,
    pub data: KeywordTaskConfig,
    pub arch: ArchConfig,
    pub classifier: ClassifierTrainConfig,
    pub distill: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            seed: 0,
            dataset: None,
            model: None,
            student: None,
            targets: None,
            empirical: None,
            out: None,
            method: Method::Ig,
            samples: 20,
            accounting: Accounting::Actual,
            normalization: Normalization::UnitInterval,
            alpha: 0.5,
            split: Split::Test,
            limit: None,
            s_values: vec![1, 2, 5, 10, 19],
            s_reference: 20,
            repeats: 1,
            student_init: StudentInit::Copy,
            data: KeywordTaskConfig::default(),
            arch: ArchConfig::default(),
            classifier: ClassifierTrainConfig::default(),
            distill: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("{}: {e}", path.display())))
            .context("parsing config file")}

    /// Pushes the top-level seed into the nested sections.
    pub fn sync_seeds(&mut self) {
        self.data.seed = self.seed;
        self.classifier.seed = self.seed;
        self.distill.seed = self.seed;
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("run config serializes")
    }

    pub fn require<'a>(&self, field: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        field
            .as_deref()
            .ok_or_else(|| UsageError(format!("`{}` needs --{flag}", self.command)).into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let mut c = RunConfig {
            seed: 9,
            ..RunConfig::default()
        };
        c.sync_seeds();
        let back: RunConfig = serde_json::from_value(c.to_value()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"samples": 7, "arch": {"embed_dim": 2}}"#).unwrap();
        assert_eq!(c.samples, 7);
        assert_eq!(c.arch.embed_dim, 2);
        assert_eq!(c.arch.hidden, vec![64]);
        assert!(serde_json::from_str::<RunConfig>(r#"{"sampels": 7}"#).is_err());
    }
}
