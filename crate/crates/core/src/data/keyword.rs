use serde::{Deserialize, Serialize};

use super::{Dataset, Instance, TokenRole, Vocab};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// Parameters of the keyword-count sentiment task.
///
/// Each instance is `CLS w_1 .. w_L SEP PAD ..` with words drawn uniformly
/// from the non-special ids. `L` is odd and drawn uniformly from
/// `[ (T-2)/2, T-2 ]`, which keeps count ties (resolved by a coin, hence
/// unlearnable) rare when neutral words are few.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeywordTaskConfig {
    pub seed: u64,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub vocab_size: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub seq_len: usize,
    pub noise_rate: f64,
}

impl Default for KeywordTaskConfig {
    fn default() -> Self {
        KeywordTaskConfig {
            seed: 0,
            train_size: 5000,
            validation_size: 500,
            test_size: 1000,
            vocab_size: 100,
            n_positive: 48,
            n_negative: 48,
            seq_len: 20,
            noise_rate: 0.02,
        }
    }
}

impl KeywordTaskConfig {
    fn content_lengths(&self) -> Vec<usize> {
        let hi = self.seq_len - 2;
        let lo = (hi / 2).max(1);
        (lo..=hi).filter(|l| l % 2 == 1).collect()
    }
}

/// Counting rule: 1 if positives outnumber negatives, 0 if fewer, `None` on a tie.
pub fn count_label(vocab: &Vocab, tokens: &[u32]) -> Option<usize> {
    let (mut pos, mut neg) = (0usize, 0usize);
    for &t in tokens {
        match vocab.role(t) {
            TokenRole::Positive => pos += 1,
            TokenRole::Negative => neg += 1,
            _ => {}
        }
    }
    match pos.cmp(&neg) {
        std::cmp::Ordering::Greater => Some(1),
        std::cmp::Ordering::Less => Some(0),
        std::cmp::Ordering::Equal => None,
    }
}

pub fn gen_keyword_task(config: &KeywordTaskConfig) -> Result<Dataset> {
    if config.seq_len < 4 {
        return Err(Error::config(format!("seq_len must be >= 4, got {}", config.seq_len)));
    }
    if config.train_size == 0 || config.validation_size == 0 || config.test_size == 0 {
        return Err(Error::config("every split needs at least one instance"));
    }
    if !(0.0..1.0).contains(&config.noise_rate) {
        return Err(Error::config(format!("noise rate {} outside [0, 1)", config.noise_rate)));
    }
    let vocab = Vocab::new(config.vocab_size, config.n_positive, config.n_negative)?;
    let lengths = config.content_lengths();
    let mut rng = SeededRng::new(config.seed);
    let mut next_id = 0u64;
    let mut make_split = |count: usize, rng: &mut SeededRng| -> Vec<Instance> {
        (0..count)
            .map(|_| {
                let len = lengths[rng.below(lengths.len() as u64) as usize];
                let mut tokens = Vec::with_capacity(config.seq_len);
                tokens.push(vocab.cls);
                for _ in 0..len {
                    tokens.push(Vocab::FIRST_WORD + rng.below(vocab.n_words() as u64) as u32);
                }
                tokens.push(vocab.sep);
                tokens.resize(config.seq_len, vocab.pad);
                let mut label = match count_label(&vocab, &tokens) {
                    Some(l) => l,
                    None => usize::from(rng.bernoulli(0.5)),
                };
                if rng.bernoulli(config.noise_rate) {
                    label = 1 - label;
                }
                let inst = Instance::new(next_id, tokens, label, &vocab);
                next_id += 1;
                inst
            })
            .collect()
    };
    let train = make_split(config.train_size, &mut rng);
    let validation = make_split(config.validation_size, &mut rng);
    let test = make_split(config.test_size, &mut rng);
    Ok(Dataset {
        vocab,
        seq_len: config.seq_len,
        seed: config.seed,
        train,
        validation,
        test,
    })
}
