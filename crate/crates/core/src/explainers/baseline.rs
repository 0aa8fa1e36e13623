use crate::error::{Error, Result};

/// Reference input: the instance with every non-special token replaced by PAD.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Baseline {
    pub tokens: Vec<u32>,
}

pub fn build_baseline(tokens: &[u32], special_mask: &[bool], pad_id: u32) -> Result<Baseline> {
    if tokens.len() != special_mask.len() {
        return Err(Error::ShapeMismatch {
            op: "build_baseline",
            detail: format!("{} tokens, mask of {}", tokens.len(), special_mask.len()),
        });
    }
    let tokens = tokens
        .iter()
        .zip(special_mask)
        .map(|(&t, &special)| if special { t } else { pad_id })
        .collect();
    Ok(Baseline { tokens })
}

/// Assignment of token positions to Shapley players.
///
/// All special positions (CLS, SEP, PAD) form feature 0 when any exist;
/// every other position is its own feature, numbered left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureGrouping {
    feature_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl FeatureGrouping {
    /// Every position its own feature.
    pub fn singletons(len: usize) -> Self {
        FeatureGrouping {
            feature_of: (0..len).collect(),
            members: (0..len).map(|i| vec![i]).collect(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.members.len()
    }

    pub fn feature_of(&self, position: usize) -> usize {
        self.feature_of[position]
    }

    pub fn members(&self, feature: usize) -> &[usize] {
        &self.members[feature]
    }

    pub fn len(&self) -> usize {
        self.feature_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature_of.is_empty()
    }

    /// Spreads per-feature scores onto member positions unchanged.
    pub fn broadcast(&self, feature_scores: &[f64]) -> Vec<f64> {
        self.feature_of.iter().map(|&g| feature_scores[g]).collect()
    }
}

pub fn group_features(special_mask: &[bool]) -> Result<FeatureGrouping> {
    if special_mask.is_empty() {
        return Err(Error::config("cannot group an empty sequence"));
    }
    let has_special = special_mask.iter().any(|&m| m);
    let mut next = usize::from(has_special);
    let mut members: Vec<Vec<usize>> = if has_special { vec![Vec::new()] } else { Vec::new() };
    let feature_of = special_mask
        .iter()
        .enumerate()
        .map(|(pos, &special)| {
            if special {
                members[0].push(pos);
                0
            } else {
                members.push(vec![pos]);
                next += 1;
                next - 1
            }
        })
        .collect();
    Ok(FeatureGrouping {
        feature_of,
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_rules() {
        let all_special = build_baseline(&[1, 2, 0], &[true, true, true], 0).unwrap();
        assert_eq!(all_special.tokens, vec![1, 2, 0]);
        let none = build_baseline(&[5, 6, 7], &[false, false, false], 0).unwrap();
        assert_eq!(none.tokens, vec![0, 0, 0]);
        let mixed = build_baseline(&[1, 10, 11, 12, 2], &[true, false, false, false, true], 0).unwrap();
        assert_eq!(mixed.tokens, vec![1, 0, 0, 0, 2]);
        let again = build_baseline(&mixed.tokens, &[true, false, false, false, true], 0).unwrap();
        assert_eq!(again, mixed);
        assert!(build_baseline(&[1, 2], &[true], 0).is_err());
    }

    #[test]
    fn grouping_rules() {
        let g = group_features(&[true, false, false, false, true]).unwrap();
        assert_eq!(g.n_features(), 4);
        assert_eq!(g.members(0), &[0, 4]);
        assert_eq!((g.feature_of(1), g.feature_of(2), g.feature_of(3)), (1, 2, 3));

        let g = group_features(&[false; 4]).unwrap();
        assert_eq!(g.n_features(), 4);
        assert_eq!(g, FeatureGrouping::singletons(4));

        let g = group_features(&[true; 3]).unwrap();
        assert_eq!(g.n_features(), 1);
        assert_eq!(g.broadcast(&[2.5]), vec![2.5; 3]);
    }

    proptest::proptest! {
        #[test]
        fn every_position_in_exactly_one_feature(mask in proptest::collection::vec(proptest::bool::ANY, 1..40)) {
            let g = group_features(&mask).unwrap();
            proptest::prop_assert!(g.n_features() <= mask.len());
            let mut seen = vec![0usize; mask.len()];
            for f in 0..g.n_features() {
                for &p in g.members(f) {
                    seen[p] += 1;
                    proptest::prop_assert_eq!(g.feature_of(p), f);
                }
            }
            proptest::prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }
}
