use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Scores used as-is.
    Raw,
    /// Min-max map onto `[0, 1]`; a constant map becomes all 0.5.
    #[default]
    UnitInterval,
    /// Division by the largest magnitude onto `[-1, 1]`; an all-zero map stays zero.
    SignedMax,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "raw" => Ok(Normalization::Raw),
            "unit_interval" => Ok(Normalization::UnitInterval),
            "signed_max" => Ok(Normalization::SignedMax),
            other => Err(Error::config(format!(
                "unknown normalization `{other}` (expected raw, unit_interval or signed_max)"
            ))),
        }
    }
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Normalization::Raw => "raw",
            Normalization::UnitInterval => "unit_interval",
            Normalization::SignedMax => "signed_max",
        })
    }
}

pub fn normalize_map(scores: &[f64], mode: Normalization) -> Vec<f64> {
    match mode {
        Normalization::Raw => scores.to_vec(),
        Normalization::UnitInterval => {
            let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let range = max - min;
            if range > 0.0 {
                scores.iter().map(|v| ((v - min) / range).clamp(0.0, 1.0)).collect()
            } else {
                vec![0.5; scores.len()]
            }
        }
        Normalization::SignedMax => {
            let peak = scores.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if peak > 0.0 {
                scores.iter().map(|v| v / peak).collect()
            } else {
                vec![0.0; scores.len()]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::argmax;

    #[test]
    fn examples() {
        assert_eq!(normalize_map(&[-2.0, 0.0, 2.0], Normalization::UnitInterval), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize_map(&[-2.0, 0.0, 2.0], Normalization::SignedMax), vec![-1.0, 0.0, 1.0]);
        assert_eq!(normalize_map(&[3.0, 3.0, 3.0], Normalization::UnitInterval), vec![0.5; 3]);
        assert_eq!(normalize_map(&[0.0, 0.0], Normalization::SignedMax), vec![0.0; 2]);
        assert_eq!(normalize_map(&[1.5, -2.0], Normalization::Raw), vec![1.5, -2.0]);
    }

    proptest::proptest! {
        #[test]
        fn signed_max_keeps_sign_and_peak(v in proptest::collection::vec(-1e3f64..1e3, 1..30)) {
            let n = normalize_map(&v, Normalization::SignedMax);
            for (a, b) in v.iter().zip(&n) {
                proptest::prop_assert_eq!(a.signum() * (a.abs() > 0.0) as i32 as f64, b.signum() * (b.abs() > 0.0) as i32 as f64);
                proptest::prop_assert!(b.abs() <= 1.0);
            }
            let abs_v: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            let abs_n: Vec<f64> = n.iter().map(|x| x.abs()).collect();
            proptest::prop_assert_eq!(argmax(&abs_v), argmax(&abs_n));
        }

        #[test]
        fn unit_interval_range(v in proptest::collection::vec(-1e6f64..1e6, 1..30)) {
            let n = normalize_map(&v, Normalization::UnitInterval);
            proptest::prop_assert!(n.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }
}
