//! Core of the formscape workbench: a seeded morphogenetic form generator,
//! image features, aesthetic predictors, 2D embeddings and genotype-space
//! exploration.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the bottom of this file fix it to `f64`, which is what the workbench uses.

pub mod morphogen;
pub mod rng;
pub mod scalar;

pub use scalar::Scalar;
pub mod embed;
pub mod explore;
pub mod featurize;
pub mod fmt;
pub mod predict;
pub mod synthetic;

pub type Mlp = predict::MlpModel<f64>;
pub type Knn = predict::KnnModel<f64>;
pub type Dataset = predict::LabeledDataset<f64>;
pub type DatasetRow = predict::Row<f64>;
pub type Distribution = predict::CategoryDistribution<f64>;
pub type Prediction = predict::Prediction<f64>;
pub type FeatureNormalizer = featurize::Normalizer<f64>;
pub type Layout = embed::EmbeddingLayout<f64>;
