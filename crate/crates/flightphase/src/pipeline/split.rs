//! Seeded train/validation/test splitting.

use serde::{Deserialize, Serialize};

use crate::nncore::Rng;

use super::dataset::EncodedRecord;
use super::PipelineError;

/// Split proportions. `test_fraction` is taken from the whole set,
/// `val_fraction_of_train` from what remains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub val_fraction_of_train: f64,
    pub seed: u64,
    /// Split within each class instead of globally. Useful for small corpora
    /// where a plain random split can starve a class.
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.2,
            val_fraction_of_train: 0.1,
            seed: 42,
            stratified: false,
        }
    }
}

const MIN_RECORDS: usize = 10;

/// (fit, val, test) triple.
pub type Split<T> = (Vec<T>, Vec<T>, Vec<T>);

/// Partition `0..classes.len()` into (fit, val, test) index sets. Sizes are
/// `test = round(test_fraction·N)`, `val = round(val_fraction_of_train·(N−test))`,
/// remainder fit.
pub fn split_indices(
    classes: &[usize],
    k: usize,
    spec: &SplitSpec,
) -> Result<Split<usize>, PipelineError> {
    let n = classes.len();
    if n < MIN_RECORDS {
        return Err(PipelineError::TooFewRecords {
            got: n,
            min: MIN_RECORDS,
        });
    }
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)
        || !(spec.val_fraction_of_train > 0.0 && spec.val_fraction_of_train < 1.0)
    {
        return Err(PipelineError::ConfigMismatch {
            reason: "split fractions must lie in (0, 1)".to_string(),
        });
    }
    let mut present = vec![false; k];
    for &c in classes {
        if c >= k {
            return Err(PipelineError::ConfigMismatch {
                reason: format!("class id {c} outside [0, {k})"),
            });
        }
        present[c] = true;
    }
    if let Some(missing) = present.iter().position(|&p| !p) {
        return Err(PipelineError::MissingClass { class: missing });
    }

    let mut rng = Rng::new(spec.seed);
    let mut fit = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();

    let mut carve = |mut order: Vec<usize>| {
        rng.shuffle(&mut order);
        let n = order.len();
        let n_test = (spec.test_fraction * n as f64).round() as usize;
        let n_val = (spec.val_fraction_of_train * (n - n_test) as f64).round() as usize;
        test.extend_from_slice(&order[..n_test]);
        val.extend_from_slice(&order[n_test..n_test + n_val]);
        fit.extend_from_slice(&order[n_test + n_val..]);
    };

    if spec.stratified {
        for class in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| classes[i] == class).collect();
            carve(members);
        }
    } else {
        carve((0..n).collect());
    }

    Ok((fit, val, test))
}

/// [`split_indices`] over encoded records, returning cloned subsets.
pub fn split_dataset(
    records: &[EncodedRecord],
    k: usize,
    spec: &SplitSpec,
) -> Result<Split<EncodedRecord>, PipelineError> {
    let classes: Vec<usize> = records.iter().map(|r| r.phase_id as usize).collect();
    let (fit, val, test) = split_indices(&classes, k, spec)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect();
    Ok((pick(&fit), pick(&val), pick(&test)))
}
