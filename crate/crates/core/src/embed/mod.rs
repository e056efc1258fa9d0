//! Two-dimensional layouts of genotype or feature vectors: exact t-SNE and a
//! PCA baseline, plus the plot-data CSV.

mod layout;
mod pca;
mod tsne;

pub use layout::{layout_export, layout_parse, score_band, LayoutRow, SCORE_BANDS};
pub use pca::{pca2, PCA_MAX_ITERATIONS, PCA_TOLERANCE};
pub use tsne::{
    calibrate_affinities, conditional_perplexities, joint_affinities, tsne, tsne_with, TsneParams,
    TsneRun, DISTANCE_FLOOR, MAX_POINTS,
};

use crate::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("exact t-SNE is limited to {MAX_POINTS} points, got {0}")]
    TooManyPoints(usize),
    #[error("input dimension {0} is below 2")]
    DimTooSmall(usize),
    #[error("row {index} has dimension {found}, expected {expected}")]
    MixedDims {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {0} contains a non-finite value")]
    NonFinite(usize),
    #[error("perplexity {perplexity} outside (1, {limit})")]
    Perplexity { perplexity: f64, limit: f64 },
    #[error("{0} ids for {1} layout rows")]
    IdCount(usize, usize),
    #[error("metadata row {row}: id {found} does not match layout id {expected}")]
    IdMismatch {
        row: usize,
        expected: u64,
        found: u64,
    },
    #[error("duplicate id {0}")]
    DuplicateId(u64),
    #[error("layout csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMethod {
    Tsne,
    Pca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceSpace {
    Genotype,
    Feature,
}

/// 2D coordinates for N input rows, with the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingLayout<T> {
    pub coords: Vec<[T; 2]>,
    pub ids: Vec<u64>,
    pub method: EmbedMethod,
    pub params: Option<TsneParams>,
    pub space: SourceSpace,
}

impl<T: Scalar> EmbeddingLayout<T> {
    pub(crate) fn new(
        coords: Vec<[T; 2]>,
        method: EmbedMethod,
        params: Option<TsneParams>,
        space: SourceSpace,
    ) -> Self {
        let ids = (0..coords.len() as u64).collect();
        Self {
            coords,
            ids,
            method,
            params,
            space,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Attaches record ids to rows; rows are numbered from 0 until then.
    pub fn with_ids(mut self, ids: Vec<u64>) -> Result<Self, EmbedError> {
        if ids.len() != self.coords.len() {
            return Err(EmbedError::IdCount(ids.len(), self.coords.len()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(&dup) = ids.iter().find(|id| !seen.insert(**id)) {
            return Err(EmbedError::DuplicateId(dup));
        }
        self.ids = ids;
        Ok(self)
    }
}

/// Checks a row set for a common dimension and finite values; returns d.
pub(crate) fn check_rows<T: Scalar, R: AsRef<[T]>>(
    x: &[R],
    min_points: usize,
) -> Result<usize, EmbedError> {
    if x.len() < min_points {
        return Err(EmbedError::TooFewPoints {
            needed: min_points,
            found: x.len(),
        });
    }
    let d = x.first().map_or(0, |r| r.as_ref().len());
    for (index, r) in x.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != d {
            return Err(EmbedError::MixedDims {
                index,
                expected: d,
                found: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite(index));
        }
    }
    Ok(d)
}
