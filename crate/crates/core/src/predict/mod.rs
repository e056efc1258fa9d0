//! Category and rank predictors: the two-hidden-layer network, the k-NN
//! baseline, evaluation reports and pseudo-labelling.

mod checkpoint;
mod dataset;
mod distribution;
mod knn;
mod metrics;
mod mlp;
mod pseudo;
mod train;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CheckpointManifest,
    CHECKPOINT_FORMAT, MANIFEST_FILE, WEIGHTS_FILE,
};
pub use dataset::{LabeledDataset, Row, Split};
pub use distribution::{confidence_margin, CategoryDistribution};
pub use knn::{knn_fit, KnnModel, DEFAULT_K};
pub use metrics::{confusion_matrix, evaluate, quartile_report, Metrics, QuartileRow};
pub use mlp::{mlp_init, Dense, HeadKind, MlpModel, TrainingManifest, DEFAULT_HIDDEN};
pub use pseudo::{pseudo_label, Proposal, PseudoLabels};
pub use train::{dataset_loss, mlp_train, History, TrainConfig};

use thiserror::Error;

use crate::featurize::NormalizerError;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("input has dimension {found}, expected {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("need at least 2 classes for a margin, got {0}")]
    TooFewClasses(usize),
    #[error("need at least {needed} rows, got {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("{0:?} split is empty")]
    EmptySplit(Split),
    #[error("row {row}: {reason}")]
    InvalidRow { row: usize, reason: String },
    #[error("probabilities must be in [0, 1] and sum to 1")]
    InvalidDistribution,
    #[error("head mismatch: {0}")]
    HeadMismatch(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Normalizer(#[from] NormalizerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What a predictor says about one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub distribution: Option<CategoryDistribution<T>>,
    /// On the 0-10 scale.
    pub rank: Option<T>,
}

impl<T: Scalar> Prediction<T> {
    pub fn category(&self) -> Option<usize> {
        self.distribution.as_ref().map(|d| d.argmax())
    }

    /// 0 for single-class distributions.
    pub fn margin(&self) -> Option<T> {
        self.distribution
            .as_ref()
            .map(|d| confidence_margin(d).unwrap_or(T::zero()))
    }
}

pub trait Predictor<T: Scalar> {
    fn input_dim(&self) -> usize;
    fn predict(&self, x: &[T]) -> Result<Prediction<T>, PredictError>;
}

/// Scalar function of a prediction that can be differentiated with
/// respect to the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Unclamped predicted rank.
    Rank,
    ClassProbability(usize),
    /// Top probability minus runner-up, for the pair realized at the input.
    Margin,
}

pub trait GradientPredictor<T: Scalar>: Predictor<T> {
    fn input_gradient(&self, x: &[T], objective: Objective) -> Result<Vec<T>, PredictError>;
}

impl<T: Scalar, P: Predictor<T> + ?Sized> Predictor<T> for &P {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }

    fn predict(&self, x: &[T]) -> Result<Prediction<T>, PredictError> {
        (**self).predict(x)
    }
}

impl<T: Scalar, P: GradientPredictor<T> + ?Sized> GradientPredictor<T> for &P {
    fn input_gradient(&self, x: &[T], objective: Objective) -> Result<Vec<T>, PredictError> {
        (**self).input_gradient(x, objective)
    }
}
