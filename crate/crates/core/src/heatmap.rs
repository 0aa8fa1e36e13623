//! Per-line HTML heatmaps comparing a target attribution map with its
//! empirical counterpart.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::Vocab;
use crate::error::{Error, Result};
use crate::eval::{normalize_map, Normalization};
use crate::explainers::AttributionMap;
use crate::fsio::write_atomic;

/// Inline CSS background for a normalized score in `[-1, 1]`: red for
/// positive, blue for negative, alpha equal to the magnitude.
pub fn score_color(score: f64) -> String {
    let a = score.abs().min(1.0);
    if score > 0.0 {
        format!("rgba(255,0,0,{a:.3})")
    } else if score < 0.0 {
        format!("rgba(0,0,255,{a:.3})")
    } else {
        "rgba(255,255,255,0.000)".to_string()
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

fn render_row(out: &mut String, title: &str, map: &AttributionMap, vocab: &Vocab) {
    let scores = normalize_map(&map.scores, Normalization::SignedMax);
    write!(
        out,
        "<div><b>{}</b> <small>({} s={}, {} passes)</small><br>",
        escape(title),
        map.method,
        map.samples,
        map.total_passes()
    )
    .expect("string write");
    for (&token, &score) in map.tokens.iter().zip(&scores) {
        let dim = if token == vocab.pad { "opacity:0.35;" } else { "" };
        write!(
            out,
            "<span style=\"background:{};{dim}padding:2px;margin:1px;font-family:monospace\" title=\"{score:.4}\">{}</span>",
            score_color(score),
            escape(&vocab.label(token))
        )
        .expect("string write");
    }
    out.push_str("</div>");
}

/// One self-contained HTML document for a target/empirical pair.
pub fn render_pair(target: &AttributionMap, empirical: &AttributionMap, vocab: &Vocab) -> Result<String> {
    if target.id != empirical.id || target.tokens != empirical.tokens {
        return Err(Error::InstanceMismatch(format!(
            "target {} and empirical {} do not explain the same sequence",
            target.id, empirical.id
        )));
    }
    let mut out = String::new();
    write!(
        out,
        "<!DOCTYPE html><html><head><meta charset=\"utf-8\"><title>instance {}</title></head><body>",
        target.id
    )
    .expect("string write");
    render_row(&mut out, "target", target, vocab);
    render_row(&mut out, "empirical", empirical, vocab);
    out.push_str("</body></html>");
    Ok(out)
}

/// Renders aligned map lists, one document per line.
pub fn render_heatmaps(targets: &[AttributionMap], empirical: &[AttributionMap], vocab: &Vocab) -> Result<String> {
    if targets.len() != empirical.len() {
        return Err(Error::InstanceMismatch(format!(
            "{} target maps vs {} empirical maps",
            targets.len(),
            empirical.len()
        )));
    }
    let mut out = String::new();
    for (t, e) in targets.iter().zip(empirical) {
        out.push_str(&render_pair(t, e, vocab)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_heatmaps(path: &Path, targets: &[AttributionMap], empirical: &[AttributionMap], vocab: &Vocab) -> Result<()> {
    write_atomic(path, render_heatmaps(targets, empirical, vocab)?.as_bytes())
}
