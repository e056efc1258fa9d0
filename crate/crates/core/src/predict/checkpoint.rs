//! Model checkpoints: `manifest.toml` plus `weights.bin`.
//!
//! The payload is a flat little-endian array of the model's scalar type
//! (`dtype` in the manifest), in this order: normalizer mean, normalizer
//! std, then for each present layer (hidden 1, hidden 2, classifier,
//! regressor) its row-major weights followed by its bias.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{Dense, HeadKind, MlpModel, TrainingManifest};
use super::{Metrics, PredictError, TrainConfig};
use crate::featurize::Normalizer;
use crate::Scalar;

pub const CHECKPOINT_FORMAT: &str = "formscape-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const WEIGHTS_FILE: &str = "weights.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    pub version: u32,
    pub dtype: String,
    pub input_dim: usize,
    pub hidden: [usize; 2],
    pub label_names: Vec<String>,
    pub payload_values: usize,
    pub init_seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub head: HeadKind,
    pub config: Option<TrainConfig>,
    pub metrics: Option<Metrics>,
}

fn payload<T: Scalar>(model: &MlpModel<T>) -> Vec<u8> {
    let mut out = Vec::new();
    let n = model.normalizer();
    for slice in [n.mean(), n.std()].into_iter().chain(model.params()) {
        for &v in slice {
            v.write_le(&mut out);
        }
    }
    out
}

pub fn encode_checkpoint<T: Scalar>(
    model: &MlpModel<T>,
    metrics: Option<&Metrics>,
) -> Result<(String, Vec<u8>), PredictError> {
    let bytes = payload(model);
    let m = model.manifest();
    let manifest = CheckpointManifest {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        dtype: T::DTYPE.into(),
        input_dim: model.input_dim(),
        hidden: model.hidden_sizes(),
        label_names: model.label_names().to_vec(),
        payload_values: bytes.len() / T::BYTES,
        init_seed: m.seed,
        epochs_run: m.epochs_run,
        best_epoch: m.best_epoch,
        train_loss: m.train_loss.clone(),
        validation_loss: m.validation_loss.clone(),
        head: model.heads(),
        config: m.config.clone(),
        metrics: metrics.cloned(),
    };
    let text = toml::to_string(&manifest).map_err(|e| PredictError::Checkpoint(e.to_string()))?;
    Ok((text, bytes))
}

pub fn decode_checkpoint<T: Scalar>(
    manifest_text: &str,
    bytes: &[u8],
) -> Result<(MlpModel<T>, CheckpointManifest), PredictError> {
    let bad = |m: String| PredictError::Checkpoint(m);
    let manifest: CheckpointManifest =
        toml::from_str(manifest_text).map_err(|e| bad(e.to_string()))?;
    if manifest.format != CHECKPOINT_FORMAT || manifest.version != CHECKPOINT_VERSION {
        return Err(bad(format!(
            "unsupported checkpoint {} v{}",
            manifest.format, manifest.version
        )));
    }
    if manifest.dtype != T::DTYPE {
        return Err(bad(format!(
            "checkpoint holds {} weights, requested {}",
            manifest.dtype,
            T::DTYPE
        )));
    }
    if bytes.len() != manifest.payload_values * T::BYTES {
        return Err(bad(format!(
            "payload has {} bytes, manifest says {} values",
            bytes.len(),
            manifest.payload_values
        )));
    }
    let mut values = bytes.chunks_exact(T::BYTES).map(T::read_le);
    let mut take = |n: usize| -> Result<Vec<T>, PredictError> {
        let v: Vec<T> = values.by_ref().take(n).collect();
        if v.len() == n {
            Ok(v)
        } else {
            Err(PredictError::Checkpoint(
                "payload too short for declared shapes".into(),
            ))
        }
    };
    let d = manifest.input_dim;
    let [a, b] = manifest.hidden;
    let normalizer = Normalizer::from_parts(take(d)?, take(d)?)?;
    let h1 = Dense::from_parts(d, a, take(d * a)?, take(a)?)?;
    let h2 = Dense::from_parts(a, b, take(a * b)?, take(b)?)?;
    let classifier = match manifest.head.classes() {
        Some(k) => Some(Dense::from_parts(b, k, take(b * k)?, take(k)?)?),
        None => None,
    };
    let regressor = match manifest.head.has_regressor() {
        true => Some(Dense::from_parts(b, 1, take(b)?, take(1)?)?),
        false => None,
    };
    if values.next().is_some() {
        return Err(bad("payload longer than declared shapes".into()));
    }
    let mut model = MlpModel::from_layers([h1, h2], classifier, regressor, normalizer)?;
    model.set_label_names(manifest.label_names.clone())?;
    *model.manifest_mut() = TrainingManifest {
        seed: manifest.init_seed,
        epochs_run: manifest.epochs_run,
        best_epoch: manifest.best_epoch,
        train_loss: manifest.train_loss.clone(),
        validation_loss: manifest.validation_loss.clone(),
        config: manifest.config.clone(),
    };
    Ok((model, manifest))
}

pub fn save_checkpoint<T: Scalar>(
    model: &MlpModel<T>,
    metrics: Option<&Metrics>,
    dir: impl AsRef<Path>,
) -> Result<(), PredictError> {
    let dir = dir.as_ref();
    let (text, bytes) = encode_checkpoint(model, metrics)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join(MANIFEST_FILE), text)?;
    fs::write(dir.join(WEIGHTS_FILE), bytes)?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(
    dir: impl AsRef<Path>,
) -> Result<(MlpModel<T>, CheckpointManifest), PredictError> {
    let dir = dir.as_ref();
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let bytes = fs::read(dir.join(WEIGHTS_FILE))?;
    decode_checkpoint(&text, &bytes)
}
