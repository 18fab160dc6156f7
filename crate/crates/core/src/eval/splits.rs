//! Train/validation/test splits over labeled core terms.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train: BTreeSet<usize>,
    pub validation: BTreeSet<usize>,
    pub test: BTreeSet<usize>,
    pub seed: u64,
}

impl SplitPlan {
    /// Held-out terms are evaluated as fringe terms: their descriptions must
    /// leave the index and they must be excluded from supervision.
    pub fn demoted(&self) -> BTreeSet<usize> {
        self.validation.union(&self.test).copied().collect()
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Splits `(id, target-level label)` pairs. With `stratify`, positives and
/// negatives are split separately so each part keeps the class ratio.
pub fn make_splits(labeled: &[(usize, bool)], ratios: SplitRatios, seed: u64, stratify: bool) -> Result<SplitPlan> {
    let sum = ratios.train + ratios.validation + ratios.test;
    if (sum - 1.0).abs() > 1e-9 || [ratios.train, ratios.validation, ratios.test].iter().any(|r| *r < 0.0) {
        return Err(Error::InvalidArgument(format!("split ratios must be non-negative and sum to 1, got {sum}")));
    }
    let mut ids: Vec<(usize, bool)> = labeled.to_vec();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument("duplicate id in split input".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strata: Vec<Vec<usize>> = if stratify {
        vec![
            ids.iter().filter(|v| v.1).map(|v| v.0).collect(),
            ids.iter().filter(|v| !v.1).map(|v| v.0).collect(),
        ]
    } else {
        vec![ids.iter().map(|v| v.0).collect()]
    };
    let mut plan = SplitPlan {
        train: BTreeSet::new(),
        validation: BTreeSet::new(),
        test: BTreeSet::new(),
        seed,
    };
    for mut stratum in strata {
        stratum.shuffle(&mut rng);
        let n = stratum.len() as f64;
        let n_val = (n * ratios.validation).round() as usize;
        let n_test = ((n * ratios.test).round() as usize).min(stratum.len() - n_val);
        plan.validation.extend(&stratum[..n_val]);
        plan.test.extend(&stratum[n_val..n_val + n_test]);
        plan.train.extend(&stratum[n_val + n_test..]);
    }
    let positive: BTreeSet<usize> = ids.iter().filter(|v| v.1).map(|v| v.0).collect();
    for (name, part, ratio) in [
        ("train", &plan.train, ratios.train),
        ("validation", &plan.validation, ratios.validation),
        ("test", &plan.test, ratios.test),
    ] {
        if ratio > 0.0 && part.is_disjoint(&positive) {
            return Err(Error::InvalidArgument(format!("{name} split has no positive terms")));
        }
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labeled(n: usize, pos_every: usize) -> Vec<(usize, bool)> {
        (0..n).map(|i| (i, i % pos_every == 0)).collect()
    }

    #[test]
    fn hundred_terms_split_eighty_ten_ten() {
        let p = make_splits(&labeled(100, 5), SplitRatios::default(), 3, true).unwrap();
        assert_eq!((p.train.len(), p.validation.len(), p.test.len()), (80, 10, 10));
        assert_eq!(p.demoted().len(), 20);
    }

    #[test]
    fn same_seed_same_split() {
        let a = make_splits(&labeled(57, 3), SplitRatios::default(), 11, true).unwrap();
        let b = make_splits(&labeled(57, 3), SplitRatios::default(), 11, true).unwrap();
        let c = make_splits(&labeled(57, 3), SplitRatios::default(), 12, true).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn split_without_positives_fails() {
        let err = make_splits(&labeled(30, 29), SplitRatios::default(), 1, true).unwrap_err();
        assert!(err.to_string().contains("no positive"));
    }

    #[test]
    fn bad_ratios_rejected() {
        let r = SplitRatios {
            train: 0.5,
            validation: 0.1,
            test: 0.1,
        };
        assert!(make_splits(&labeled(10, 2), r, 0, true).is_err());
    }

    proptest! {
        #[test]
        fn parts_are_disjoint_and_exhaustive(n in 20usize..200, every in 2usize..6, seed in 0u64..1000, stratify: bool) {
            let input = labeled(n, every);
            if let Ok(p) = make_splits(&input, SplitRatios::default(), seed, stratify) {
                prop_assert!(p.train.is_disjoint(&p.validation));
                prop_assert!(p.train.is_disjoint(&p.test));
                prop_assert!(p.validation.is_disjoint(&p.test));
                prop_assert_eq!(p.len(), n);
            }
        }
    }
}
