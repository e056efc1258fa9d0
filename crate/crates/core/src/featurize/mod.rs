//! Fixed-length descriptors for phenotype images: the built-in extractor,
//! z-score normalization, and the AEFV interchange file for vectors computed
//! elsewhere (for example a CNN's penultimate layer).

mod aefv;
mod extract;
mod normalizer;

pub use aefv::{
    read_features, read_features_file, write_features, write_features_file, AefvError, AEFV_MAGIC,
    AEFV_VERSION,
};
pub use extract::{
    extract_features, BUILTIN_DIM, INTENSITY_BINS, ORIENTATION_BINS, RADIAL_BINS, SCALAR_STATS,
};
pub use normalizer::{Normalizer, NormalizerError, STD_FLOOR};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    Builtin,
    Imported,
}

/// Finite real descriptor of one phenotype image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    source: FeatureSource,
}

impl FeatureVector {
    pub(crate) fn builtin(values: Vec<f64>) -> Self {
        Self {
            values,
            source: FeatureSource::Builtin,
        }
    }

    /// `None` if any value is non-finite.
    pub fn new(values: Vec<f64>, source: FeatureSource) -> Option<Self> {
        values
            .iter()
            .all(|v| v.is_finite())
            .then_some(Self { values, source })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> FeatureSource {
        self.source
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}
