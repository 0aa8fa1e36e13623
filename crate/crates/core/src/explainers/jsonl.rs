use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AttributionMap;
use crate::error::{Error, Result};
use crate::fsio::{read_to_string, write_atomic};

/// Attribution JSONL: an optional `{"header": {...}}` line, then one
/// [`AttributionMap`] per line sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionFile {
    pub header: Option<serde_json::Value>,
    pub maps: Vec<AttributionMap>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: serde_json::Value,
}

pub fn write_attributions(path: &Path, header: Option<serde_json::Value>, maps: &[AttributionMap]) -> Result<()> {
    let mut sorted: Vec<&AttributionMap> = maps.iter().collect();
    sorted.sort_by_key(|m| m.id);
    let mut out = String::new();
    if let Some(header) = header {
        out.push_str(&serde_json::to_string(&HeaderLine { header })?);
        out.push('\n');
    }
    for map in sorted {
        if let Some(pos) = map.scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("attribution {} score {pos}", map.id),
            });
        }
        out.push_str(&serde_json::to_string(map)?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_attributions(path: &Path) -> Result<AttributionFile> {
    let text = read_to_string(path)?;
    let mut header = None;
    let mut maps = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if idx == 0 && line.starts_with("{\"header\"") {
            let h: HeaderLine =
                serde_json::from_str(line).map_err(|e| Error::parse(path, 1, e.to_string()))?;
            header = Some(h.header);
            continue;
        }
        let map: AttributionMap =
            serde_json::from_str(line).map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        if map.scores.len() != map.tokens.len() {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("{} scores for {} tokens", map.scores.len(), map.tokens.len()),
            ));
        }
        maps.push(map);
    }
    Ok(AttributionFile { header, maps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explainers::{Accounting, Method};

    fn map(id: u64, scores: Vec<f64>) -> AttributionMap {
        AttributionMap {
            id,
            method: Method::Svs,
            samples: 3,
            seed: 17,
            target_class: Some(1),
            tokens: vec![1; scores.len()],
            scores,
            fwd_passes: 9,
            bwd_passes: 0,
            accounting: Accounting::Paper,
        }
    }

    #[test]
    fn field_layout() {
        let line = serde_json::to_string(&map(2, vec![0.5, -0.25])).unwrap();
        assert_eq!(
            line,
            r#"{"id":2,"method":"svs","samples":3,"seed":17,"target_class":1,"tokens":[1,1],"scores":[0.5,-0.25],"fwd_passes":9,"bwd_passes":0,"accounting":"paper"}"#
        );
    }

    #[test]
    fn round_trip_sorted_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        let maps = vec![map(5, vec![0.1 + 0.2, 1e-300]), map(1, vec![-3.0, 7.0 / 3.0])];
        write_attributions(&path, Some(serde_json::json!({"total_fwd": 18})), &maps).unwrap();
        let file = read_attributions(&path).unwrap();
        assert_eq!(file.header.unwrap()["total_fwd"], 18);
        assert_eq!(file.maps, vec![maps[1].clone(), maps[0].clone()]);
    }

    #[test]
    fn malformed_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        write_attributions(&path, None, &[map(1, vec![1.0])]).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{\"id\": 2}\n");
        std::fs::write(&path, text).unwrap();
        let err = read_attributions(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }
}
