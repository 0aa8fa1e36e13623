use rayon::prelude::*;

use super::{Accounting, AttributionMap, Method};
use crate::data::Instance;
use crate::error::{Error, Result};
use crate::models::StudentExplainer;

/// One forward pass through the student; no classifier passes at all.
pub fn empirical_explain(student: &StudentExplainer, instance: &Instance) -> Result<AttributionMap> {
    if instance.tokens.len() != student.seq_len() {
        return Err(Error::SequenceLength {
            expected: student.seq_len(),
            actual: instance.tokens.len(),
        });
    }
    let scores = student.student_forward(&instance.tokens)?;
    Ok(AttributionMap {
        id: instance.id,
        method: Method::Empirical,
        samples: 0,
        seed: 0,
        target_class: None,
        tokens: instance.tokens.clone(),
        scores,
        fwd_passes: 1,
        bwd_passes: 0,
        accounting: Accounting::Actual,
    })
}

pub fn empirical_explain_split(student: &StudentExplainer, instances: &[Instance]) -> Result<Vec<AttributionMap>> {
    instances
        .par_iter()
        .map(|inst| {
            empirical_explain(student, inst).map_err(|e| Error::Instance {
                id: inst.id,
                source: Box::new(e),
            })
        })
        .collect()
}
