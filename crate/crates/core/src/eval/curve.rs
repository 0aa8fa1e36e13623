use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{mean_map_mse, paper_passes, Normalization};
use crate::data::Instance;
use crate::error::{Error, Result};
use crate::explainers::{explain_split, AttributionMap, ExplainerSpec, Method};
use crate::fsio::{read_to_string, write_atomic};
use crate::models::EmbeddingClassifier;
use crate::numerics::derive_seed;

pub const CURVE_CSV_HEADER: &str = "s,mean_mse,passes_per_instance_paper_accounting";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub s_reference: usize,
    pub s_values: Vec<usize>,
    pub seed: u64,
    /// Independent explanation runs averaged per curve point.
    pub repeats: usize,
    pub normalization: Normalization,
}

impl CurveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s_values.is_empty() {
            return Err(Error::config("curve needs at least one s value"));
        }
        if self.repeats == 0 {
            return Err(Error::config("curve needs at least one repeat"));
        }
        if self.s_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(format!("s values must be strictly increasing, got {:?}", self.s_values)));
        }
        if self.s_values[0] == 0 {
            return Err(Error::config("s values must be positive"));
        }
        let max = *self.s_values.last().expect("non-empty");
        if max >= self.s_reference {
            return Err(Error::config(format!(
                "largest s value {max} must be below the reference s {}",
                self.s_reference
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub samples: usize,
    pub mean_mse: f64,
    pub passes_per_instance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCurve {
    pub method: Method,
    pub s_reference: usize,
    pub points: Vec<CurvePoint>,
}

impl ConvergenceCurve {
    pub fn at(&self, samples: usize) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.samples == samples)
    }
}

/// Explains `split` at `s_reference` and then at every `s_values` entry,
/// reporting the mean per-sequence MSE against the reference maps.
pub fn convergence_curve<F: EmbeddingClassifier + ?Sized>(
    f: &F,
    spec: &ExplainerSpec,
    split: &[Instance],
    config: &CurveConfig,
) -> Result<ConvergenceCurve> {
    config.validate()?;
    if split.is_empty() {
        return Err(Error::config("curve needs a non-empty split"));
    }
    let references = reference_maps(f, spec, split, config)?;
    convergence_curve_with_references(f, spec, split, &references, config)
}

/// The `s_reference` maps a curve is measured against, seeded with
/// `derive_seed(seed, s_reference)`.
pub fn reference_maps<F: EmbeddingClassifier + ?Sized>(
    f: &F,
    spec: &ExplainerSpec,
    split: &[Instance],
    config: &CurveConfig,
) -> Result<Vec<AttributionMap>> {
    let reference_spec = spec.with_samples(config.s_reference);
    explain_split(f, &reference_spec, split, derive_seed(config.seed, config.s_reference as u64))
}

/// Like [`convergence_curve`] with precomputed reference maps aligned with `split`.
pub fn convergence_curve_with_references<F: EmbeddingClassifier + ?Sized>(
    f: &F,
    spec: &ExplainerSpec,
    split: &[Instance],
    references: &[AttributionMap],
    config: &CurveConfig,
) -> Result<ConvergenceCurve> {
    config.validate()?;
    if references.len() != split.len() {
        return Err(Error::InstanceMismatch(format!(
            "{} references for {} instances",
            references.len(),
            split.len()
        )));
    }
    if let Some(r) = references.iter().find(|r| r.samples != config.s_reference || r.method != spec.method) {
        return Err(Error::InstanceMismatch(format!(
            "reference {} is {} s={}, expected {} s={}",
            r.id, r.method, r.samples, spec.method, config.s_reference
        )));
    }
    let mut points = Vec::with_capacity(config.s_values.len());
    for &s in &config.s_values {
        let point_spec = spec.with_samples(s);
        let mut mse = 0.0;
        let mut passes = 0.0;
        for r in 0..config.repeats {
            let seed = derive_seed(derive_seed(config.seed, s as u64), r as u64);
            let maps = explain_split(f, &point_spec, split, seed)?;
            mse += mean_map_mse(references, &maps, config.normalization)?;
            passes += maps.iter().map(|m| paper_passes(m) as f64).sum::<f64>() / maps.len() as f64;
        }
        points.push(CurvePoint {
            samples: s,
            mean_mse: mse / config.repeats as f64,
            passes_per_instance: passes / config.repeats as f64,
        });
    }
    Ok(ConvergenceCurve {
        method: spec.method,
        s_reference: config.s_reference,
        points,
    })
}

/// Smallest listed `s` whose curve MSE is strictly below `student_mse`.
pub fn intersection_point(curve: &ConvergenceCurve, student_mse: f64) -> Option<usize> {
    curve.points.iter().find(|p| p.mean_mse < student_mse).map(|p| p.samples)
}

pub fn write_curve_csv(path: &Path, curve: &ConvergenceCurve) -> Result<()> {
    let mut out = format!("{CURVE_CSV_HEADER}\n");
    for p in &curve.points {
        writeln!(out, "{},{:.16e},{:.16e}", p.samples, p.mean_mse, p.passes_per_instance).expect("string write");
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CURVE_CSV_HEADER => {}
        _ => return Err(Error::parse(path, 1, format!("expected header {CURVE_CSV_HEADER}"))),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let bad = |m: String| Error::parse(path, i + 1, m);
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(bad(format!("expected 3 columns, got {}", cols.len())));
            }
            Ok(CurvePoint {
                samples: cols[0].parse().map_err(|e| bad(format!("{e}")))?,
                mean_mse: cols[1].parse().map_err(|e| bad(format!("{e}")))?,
                passes_per_instance: cols[2].parse().map_err(|e| bad(format!("{e}")))?,
            })
        })
        .collect()
}
