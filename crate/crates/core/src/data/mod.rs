//! Synthetic keyword-count classification tasks and their JSONL persistence.

mod io;
mod keyword;

use serde::{Deserialize, Serialize};

pub use io::{load_dataset, save_dataset};
pub use keyword::{gen_keyword_task, KeywordTaskConfig};

use crate::error::{Error, Result};

/// Token id layout of a synthetic vocabulary.
///
/// Ids `0..3` are PAD, CLS and SEP; positive signals, negative signals and
/// neutral words follow as contiguous ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub size: usize,
    pub pad: u32,
    pub cls: u32,
    pub sep: u32,
    pub n_positive: usize,
    pub n_negative: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenRole {
    Pad,
    Cls,
    Sep,
    Positive,
    Negative,
    Neutral,
}

impl Vocab {
    pub const FIRST_WORD: u32 = 3;

    pub fn new(size: usize, n_positive: usize, n_negative: usize) -> Result<Self> {
        if n_positive == 0 || n_negative == 0 {
            return Err(Error::config("signal sets must be non-empty"));
        }
        if size < Self::FIRST_WORD as usize + n_positive + n_negative {
            return Err(Error::config(format!(
                "vocabulary of {size} cannot hold 3 special ids, {n_positive} positive and {n_negative} negative ids"
            )));
        }
        Ok(Vocab {
            size,
            pad: 0,
            cls: 1,
            sep: 2,
            n_positive,
            n_negative,
        })
    }

    pub fn n_neutral(&self) -> usize {
        self.size - Self::FIRST_WORD as usize - self.n_positive - self.n_negative
    }

    /// Number of non-special ids.
    pub fn n_words(&self) -> usize {
        self.size - Self::FIRST_WORD as usize
    }

    pub fn role(&self, id: u32) -> TokenRole {
        let pos_end = Self::FIRST_WORD as usize + self.n_positive;
        let neg_end = pos_end + self.n_negative;
        match id {
            _ if id == self.pad => TokenRole::Pad,
            _ if id == self.cls => TokenRole::Cls,
            _ if id == self.sep => TokenRole::Sep,
            _ if (id as usize) < pos_end => TokenRole::Positive,
            _ if (id as usize) < neg_end => TokenRole::Negative,
            _ => TokenRole::Neutral,
        }
    }

    pub fn is_special(&self, id: u32) -> bool {
        id == self.pad || id == self.cls || id == self.sep
    }

    /// Short display label: `[PAD]`, `[CLS]`, `[SEP]`, `pos17`, `neg60`, `w99`.
    pub fn label(&self, id: u32) -> String {
        match self.role(id) {
            TokenRole::Pad => "[PAD]".into(),
            TokenRole::Cls => "[CLS]".into(),
            TokenRole::Sep => "[SEP]".into(),
            TokenRole::Positive => format!("pos{id}"),
            TokenRole::Negative => format!("neg{id}"),
            TokenRole::Neutral => format!("w{id}"),
        }
    }
}

impl Default for Vocab {
    fn default() -> Self {
        Vocab::new(100, 48, 48).expect("default vocabulary is valid")
    }
}

/// One padded token sequence with its label and special-token mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: u64,
    pub tokens: Vec<u32>,
    pub label: usize,
    pub mask: Vec<bool>,
}

impl Instance {
    /// Builds an instance, deriving the mask from the vocabulary's special ids.
    pub fn new(id: u64, tokens: Vec<u32>, label: usize, vocab: &Vocab) -> Self {
        let mask = tokens.iter().map(|&t| vocab.is_special(t)).collect();
        Instance {
            id,
            tokens,
            label,
            mask,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::config(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub vocab: Vocab,
    pub seq_len: usize,
    pub seed: u64,
    pub train: Vec<Instance>,
    pub validation: Vec<Instance>,
    pub test: Vec<Instance>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[Instance] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &Instance> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }

    /// Checks length, vocabulary bounds, mask consistency and id uniqueness.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for inst in self.all() {
            if inst.tokens.len() != self.seq_len || inst.mask.len() != self.seq_len {
                return Err(Error::SequenceLength {
                    expected: self.seq_len,
                    actual: inst.tokens.len(),
                });
            }
            for (position, (&t, &m)) in inst.tokens.iter().zip(&inst.mask).enumerate() {
                if t as usize >= self.vocab.size {
                    return Err(Error::OutOfVocabulary {
                        id: t,
                        position,
                        vocab_size: self.vocab.size,
                    });
                }
                if m != self.vocab.is_special(t) {
                    return Err(Error::InstanceMismatch(format!(
                        "instance {}: mask disagrees with token {t} at position {position}",
                        inst.id
                    )));
                }
            }
            if !seen.insert(inst.id) {
                return Err(Error::InstanceMismatch(format!("duplicate instance id {}", inst.id)));
            }
        }
        Ok(())
    }
}
