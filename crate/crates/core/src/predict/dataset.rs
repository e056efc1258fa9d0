use serde::{Deserialize, Serialize};

use super::PredictError;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row<T> {
    pub input: Vec<T>,
    pub category: Option<usize>,
    pub rank: Option<T>,
    pub split: Split,
}

/// Inputs with optional category ids and 0-10 ranks, each row assigned to
/// the training or validation side.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    rows: Vec<Row<T>>,
    label_names: Vec<String>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(rows: Vec<Row<T>>, label_names: Vec<String>) -> Result<Self, PredictError> {
        let dim = rows.first().map_or(0, |r| r.input.len());
        for (i, r) in rows.iter().enumerate() {
            if r.input.len() != dim {
                return Err(PredictError::DimMismatch {
                    expected: dim,
                    found: r.input.len(),
                });
            }
            if r.input.iter().any(|x| !x.is_finite()) {
                return Err(PredictError::InvalidRow {
                    row: i,
                    reason: "non-finite input".into(),
                });
            }
            if let Some(c) = r.category {
                if c >= label_names.len() {
                    return Err(PredictError::LabelOutOfRange {
                        label: c,
                        classes: label_names.len(),
                    });
                }
            }
            if let Some(rank) = r.rank {
                if !(rank >= T::zero() && rank <= T::of(10.0)) {
                    return Err(PredictError::InvalidRow {
                        row: i,
                        reason: format!("rank {rank} outside [0, 10]"),
                    });
                }
            }
        }
        Ok(Self { rows, label_names })
    }

    pub fn rows(&self) -> &[Row<T>] {
        &self.rows
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn input_dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.input.len())
    }

    pub fn side(&self, split: Split) -> impl Iterator<Item = &Row<T>> {
        self.rows.iter().filter(move |r| r.split == split)
    }

    pub fn train(&self) -> impl Iterator<Item = &Row<T>> {
        self.side(Split::Train)
    }

    pub fn validation(&self) -> impl Iterator<Item = &Row<T>> {
        self.side(Split::Validation)
    }

    /// Errors unless both sides are nonempty.
    pub fn require_split(&self) -> Result<(), PredictError> {
        for side in [Split::Train, Split::Validation] {
            if self.side(side).next().is_none() {
                return Err(PredictError::EmptySplit(side));
            }
        }
        Ok(())
    }
}
