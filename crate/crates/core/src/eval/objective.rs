use serde::{Deserialize, Serialize};

use super::{normalize_map, Normalization};
use crate::distill::mse_loss;
use crate::error::{Error, Result};
use crate::explainers::{Accounting, AttributionMap, Method};

/// Weights of the accuracy (`alpha`) and efficiency (`beta`) terms; they sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    alpha: f64,
    beta: f64,
}

impl ObjectiveWeights {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::config(format!("alpha {alpha} outside [0, 1]")));
        }
        Ok(ObjectiveWeights {
            alpha,
            beta: 1.0 - alpha,
        })
    }

    pub fn with_beta(alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) || (alpha + beta - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!("need alpha, beta in [0, 1] with alpha + beta = 1, got {alpha}, {beta}")));
        }
        Ok(ObjectiveWeights { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Neumaier-compensated sum, so averages of identical terms come out exact.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Model passes of `map` under paper accounting.
///
/// Shapley sampling recorded in actual mode ran `s (n - 1) + 2` passes; the
/// paper figure `s n` is that count minus 2 plus `s`.
pub fn paper_passes(map: &AttributionMap) -> u64 {
    match (map.method, map.accounting) {
        (Method::Svs, Accounting::Actual) => (map.fwd_passes + map.samples as u64).saturating_sub(2),
        _ => map.total_passes(),
    }
}

/// Per-sequence MSE between two maps of the same instance after normalizing each.
pub fn map_mse(a: &AttributionMap, b: &AttributionMap, mode: Normalization) -> Result<f64> {
    if a.id != b.id {
        return Err(Error::InstanceMismatch(format!("map ids {} and {} differ", a.id, b.id)));
    }
    if a.scores.len() != b.scores.len() {
        return Err(Error::InstanceMismatch(format!(
            "instance {}: {} vs {} scores",
            a.id,
            a.scores.len(),
            b.scores.len()
        )));
    }
    mse_loss(&normalize_map(&a.scores, mode), &normalize_map(&b.scores, mode))
}

/// Mean of [`map_mse`] over aligned map lists.
pub fn mean_map_mse(a: &[AttributionMap], b: &[AttributionMap], mode: Normalization) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InstanceMismatch(format!("{} maps vs {} maps", a.len(), b.len())));
    }
    let terms = a.iter().zip(b).map(|(x, y)| map_mse(x, y, mode)).collect::<Result<Vec<_>>>()?;
    Ok(compensated_sum(terms) / a.len() as f64)
}

/// `mean_x [ alpha * D(E_f(x), e(x)) + beta * passes(e(x)) / passes(E_f(x)) ]`
/// with `D` the normalized per-sequence MSE and passes counted forward plus
/// backward under paper accounting.
pub fn objective(
    targets: &[AttributionMap],
    candidates: &[AttributionMap],
    weights: ObjectiveWeights,
    mode: Normalization,
) -> Result<f64> {
    if targets.len() != candidates.len() || targets.is_empty() {
        return Err(Error::InstanceMismatch(format!(
            "{} targets vs {} candidates",
            targets.len(),
            candidates.len()
        )));
    }
    let mut terms = Vec::with_capacity(targets.len());
    for (t, c) in targets.iter().zip(candidates) {
        let (tp, cp) = (paper_passes(t), paper_passes(c));
        if tp == 0 || tp < cp {
            return Err(Error::InstanceMismatch(format!(
                "instance {}: target needs {tp} passes, candidate {cp}; the candidate may not be costlier",
                t.id
            )));
        }
        let accuracy = if weights.alpha > 0.0 { map_mse(t, c, mode)? } else {
            if t.id != c.id {
                return Err(Error::InstanceMismatch(format!("map ids {} and {} differ", t.id, c.id)));
            }
            0.0
        };
        terms.push(weights.alpha * accuracy + weights.beta * (cp as f64 / tp as f64));
    }
    Ok(compensated_sum(terms) / targets.len() as f64)
}
