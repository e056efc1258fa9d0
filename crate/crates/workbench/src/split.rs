//! Stratified train/validation assignment.

use std::collections::BTreeMap;

use formscape_core::predict::Split;
use formscape_core::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_SPLIT_RATIO: f64 = 0.8;
pub const MIN_SPLIT_RECORDS: usize = 10;

/// Absorbs rounding in `(1 - ratio) * n`, so 10 records at 0.8 give 2.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("need at least {MIN_SPLIT_RECORDS} labeled records to split, found {0}")]
    TooFew(usize),
    #[error("ratio {0} must lie strictly between 0 and 1")]
    Ratio(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub ratio: f64,
    pub seed: u64,
    /// Sorted ascending.
    pub train: Vec<u64>,
    /// Sorted ascending.
    pub validation: Vec<u64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SplitAssignment {
    pub fn side(&self, id: u64) -> Option<Split> {
        if self.train.binary_search(&id).is_ok() {
            Some(Split::Train)
        } else if self.validation.binary_search(&id).is_ok() {
            Some(Split::Validation)
        } else {
            None
        }
    }
}

/// Shuffles each category's ids with one seeded stream (categories in
/// sorted order, uncategorized first) and sends floor((1 - ratio)·n) of
/// each to validation. Categories with fewer than two records go wholly to
/// training with a warning.
pub fn stratified_split(
    items: &[(u64, Option<&str>)],
    ratio: f64,
    seed: u64,
) -> Result<SplitAssignment, SplitError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(SplitError::Ratio(ratio));
    }
    if items.len() < MIN_SPLIT_RECORDS {
        return Err(SplitError::TooFew(items.len()));
    }
    let mut strata: BTreeMap<Option<&str>, Vec<u64>> = BTreeMap::new();
    for &(id, category) in items {
        strata.entry(category).or_default().push(id);
    }
    let mut rng = SplitMix64::new(seed);
    let mut out = SplitAssignment {
        ratio,
        seed,
        train: Vec::new(),
        validation: Vec::new(),
        warnings: Vec::new(),
    };
    for (category, mut ids) in strata {
        ids.sort_unstable();
        if ids.len() < 2 {
            out.warnings.push(format!(
                "category {} has {} record, placed in training",
                category.unwrap_or("(none)"),
                ids.len()
            ));
            out.train.extend(ids);
            continue;
        }
        rng.shuffle(&mut ids);
        let n_val = ((1.0 - ratio) * ids.len() as f64 + FLOOR_SLACK).floor() as usize;
        out.validation.extend(&ids[..n_val]);
        out.train.extend(&ids[n_val..]);
    }
    out.train.sort_unstable();
    out.validation.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn items(counts: &[usize]) -> Vec<(u64, Option<&'static str>)> {
        const NAMES: [&str; 4] = ["brain", "mess", "balloon", "plant"];
        let mut out = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                out.push((out.len() as u64 * 7 + 1, Some(NAMES[c])));
            }
        }
        out
    }

    #[test]
    fn ten_records_split_eight_two() {
        let s = stratified_split(&items(&[10]), 0.8, 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len()), (8, 2));
    }

    #[test]
    fn paper_sized_population_floors_validation() {
        let s = stratified_split(&items(&[1774]), 0.8, 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len()), (1420, 354));
    }

    #[test]
    fn singleton_category_goes_to_training() {
        let s = stratified_split(&items(&[12, 1]), 0.8, 3).unwrap();
        assert_eq!(s.warnings.len(), 1);
        let lone = items(&[12, 1])[12].0;
        assert_eq!(s.side(lone), Some(Split::Train));
    }

    #[test]
    fn errors() {
        assert_eq!(
            stratified_split(&items(&[9]), 0.8, 0),
            Err(SplitError::TooFew(9))
        );
        assert_eq!(
            stratified_split(&items(&[10]), 1.0, 0),
            Err(SplitError::Ratio(1.0))
        );
    }

    proptest! {
        #[test]
        fn stratified_and_deterministic(counts in proptest::collection::vec(0usize..60, 1..4), ratio in 0.05f64..0.95, seed in any::<u64>()) {
            let it = items(&counts);
            prop_assume!(it.len() >= MIN_SPLIT_RECORDS);
            let s = stratified_split(&it, ratio, seed).unwrap();
            prop_assert_eq!(&s, &stratified_split(&it, ratio, seed).unwrap());
            prop_assert_eq!(s.train.len() + s.validation.len(), it.len());
            for (c, &n) in counts.iter().enumerate() {
                if n < 2 {
                    continue;
                }
                let start: usize = counts[..c].iter().sum();
                let val = it[start..start + n].iter().filter(|(id, _)| s.side(*id) == Some(Split::Validation)).count();
                let expected = (1.0 - ratio) * n as f64;
                prop_assert!((val as f64 - expected).abs() < 1.0 + 1e-9, "{} of {}", val, n);
            }
        }
    }
}
