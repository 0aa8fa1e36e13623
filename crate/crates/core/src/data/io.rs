use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Instance, Vocab};
use crate::error::{Error, Result};
use crate::fsio::{read_to_string, sha256_hex, write_atomic};

const FORMAT: &str = "attrib-dataset";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct SplitCounts {
    train: usize,
    validation: usize,
    test: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    vocab: Vocab,
    seq_len: usize,
    seed: u64,
    counts: SplitCounts,
    /// SHA-256 of every byte following the header line.
    checksum: String,
}

/// Writes the dataset as a header line followed by one instance per line,
/// train then validation then test.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut body = String::new();
    for inst in dataset.all() {
        body.push_str(&serde_json::to_string(inst)?);
        body.push('\n');
    }
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        vocab: dataset.vocab.clone(),
        seq_len: dataset.seq_len,
        seed: dataset.seed,
        counts: SplitCounts {
            train: dataset.train.len(),
            validation: dataset.validation.len(),
            test: dataset.test.len(),
        },
        checksum: sha256_hex(body.as_bytes()),
    };
    let mut out = serde_json::to_string(&header)?;
    out.push('\n');
    out.push_str(&body);
    write_atomic(path, out.as_bytes())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = read_to_string(path)?;
    let (header_line, body) = match text.split_once('\n') {
        Some(parts) => parts,
        None => return Err(Error::parse(path, 1, "missing header line")),
    };
    let header: Header = serde_json::from_str(header_line)
        .map_err(|e| Error::parse(path, 1, format!("bad header: {e}")))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::parse(
            path,
            1,
            format!("unsupported format {} v{}", header.format, header.version),
        ));
    }
    let expected = header.counts.train + header.counts.validation + header.counts.test;
    let mut instances = Vec::with_capacity(expected);
    for (idx, line) in body.lines().enumerate() {
        let line_no = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let inst: Instance = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        instances.push(inst);
    }
    if instances.len() != expected {
        return Err(Error::parse(
            path,
            body.lines().count() + 1,
            format!("expected {expected} instances, found {}", instances.len()),
        ));
    }
    let actual = sha256_hex(body.as_bytes());
    if actual != header.checksum {
        return Err(Error::parse(
            path,
            1,
            format!("checksum mismatch: header {}, content {actual}", header.checksum),
        ));
    }
    let test = instances.split_off(header.counts.train + header.counts.validation);
    let validation = instances.split_off(header.counts.train);
    let dataset = Dataset {
        vocab: header.vocab,
        seq_len: header.seq_len,
        seed: header.seed,
        train: instances,
        validation,
        test,
    };
    dataset.validate()?;
    Ok(dataset)
}
