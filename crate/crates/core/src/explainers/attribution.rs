use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ig,
    Svs,
    ExactShapley,
    Empirical,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ig => "ig",
            Method::Svs => "svs",
            Method::ExactShapley => "exact_shapley",
            Method::Empirical => "empirical",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "ig" => Ok(Method::Ig),
            "svs" => Ok(Method::Svs),
            "exact_shapley" => Ok(Method::ExactShapley),
            "empirical" => Ok(Method::Empirical),
            other => Err(Error::config(format!(
                "unknown method `{other}` (expected ig, svs, exact_shapley or empirical)"
            ))),
        }
    }
}

/// How model passes are reported.
///
/// `Actual` counts evaluations performed. `Paper` reports Shapley sampling
/// as `s * n` passes regardless of memoization; IG is `s` forward plus `s`
/// backward passes in both modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Accounting {
    #[default]
    Actual,
    Paper,
}

impl std::str::FromStr for Accounting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "actual" => Ok(Accounting::Actual),
            "paper" => Ok(Accounting::Paper),
            other => Err(Error::config(format!("unknown accounting mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for Accounting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Accounting::Actual => "actual",
            Accounting::Paper => "paper",
        })
    }
}

/// Model-pass counts for one explanation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CostLedger {
    pub forward_passes: u64,
    pub backward_passes: u64,
}

impl CostLedger {
    pub fn record_forward(&mut self, n: u64) {
        self.forward_passes += n;
    }

    pub fn record_backward(&mut self, n: u64) {
        self.backward_passes += n;
    }

    /// Forward and backward passes weighted equally.
    pub fn total(&self) -> u64 {
        self.forward_passes + self.backward_passes
    }
}

/// Per-token attribution scores for one explained decision.
///
/// Serializes to one attribution JSONL record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionMap {
    pub id: u64,
    pub method: Method,
    pub samples: usize,
    pub seed: u64,
    /// `None` for empirical maps, which do not consult the classifier.
    pub target_class: Option<usize>,
    pub tokens: Vec<u32>,
    pub scores: Vec<f64>,
    pub fwd_passes: u64,
    pub bwd_passes: u64,
    pub accounting: Accounting,
}

impl AttributionMap {
    pub fn ledger(&self) -> CostLedger {
        CostLedger {
            forward_passes: self.fwd_passes,
            backward_passes: self.bwd_passes,
        }
    }

    pub fn total_passes(&self) -> u64 {
        self.fwd_passes + self.bwd_passes
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}
