//! Training jobs, stored models, prediction and pseudo-labelling.

use std::fs;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use formscape_core::embed::SourceSpace;
use formscape_core::featurize::BUILTIN_DIM;
use formscape_core::predict::{
    evaluate, knn_fit, load_checkpoint, mlp_train, pseudo_label, save_checkpoint, HeadKind,
    History, Metrics, Predictor, Row, Split, TrainConfig, DEFAULT_HIDDEN, DEFAULT_K,
};
use formscape_core::{Dataset, Mlp};
use serde::{Deserialize, Serialize};

use crate::record::{genotype_from_unit, Provenance};
use crate::store::{ingest, Result, Store, StoreError, StoredModel, MODELS_DIR};

/// Minimum labeled rows on each side of the split.
pub const MIN_ROWS_PER_SIDE: usize = 10;
pub const MODEL_INFO_FILE: &str = "info.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Category,
    Rank,
    Both,
}

impl Target {
    fn wants_category(self) -> bool {
        matches!(self, Target::Category | Target::Both)
    }

    fn wants_rank(self) -> bool {
        matches!(self, Target::Rank | Target::Both)
    }
}

fn default_hidden() -> [usize; 2] {
    DEFAULT_HIDDEN
}

fn default_k() -> usize {
    DEFAULT_K
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRequest {
    pub space: SourceSpace,
    pub target: Target,
    #[serde(default)]
    pub config: TrainConfig,
    /// Admit rows whose labels were predicted rather than judged.
    #[serde(default)]
    pub include_pseudo: bool,
    #[serde(default = "default_hidden")]
    pub hidden: [usize; 2],
    #[serde(default = "default_k")]
    pub knn_k: usize,
}

impl TrainRequest {
    pub fn new(space: SourceSpace, target: Target) -> Self {
        Self {
            space,
            target,
            config: TrainConfig::default(),
            include_pseudo: false,
            hidden: DEFAULT_HIDDEN,
            knn_k: DEFAULT_K,
        }
    }
}

/// Dataset assembled from the store, detached from it so training can run
/// without holding the store.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub request: TrainRequest,
    pub dataset: Dataset,
    /// Record id of each dataset row.
    pub ids: Vec<u64>,
    /// Eligible labeled records outside the current split.
    pub unassigned: usize,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub set: TrainingSet,
    pub model: Mlp,
    pub history: History,
    pub metrics: Metrics,
    pub knn_metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub id: u64,
    pub space: SourceSpace,
    pub target: Target,
    pub include_pseudo: bool,
    pub input_dim: usize,
    pub label_names: Vec<String>,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub created: DateTime<Utc>,
    pub metrics: Metrics,
    pub knn_k: usize,
    pub knn_metrics: Metrics,
}

/// What a stored model says about one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub model_id: u64,
    pub category: Option<String>,
    pub probabilities: Option<Vec<f64>>,
    pub margin: Option<f64>,
    pub rank: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictInput {
    Genotype(Vec<f64>),
    Record(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelProposal {
    pub id: u64,
    pub category: String,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PseudoReport {
    pub proposals: Vec<LabelProposal>,
    /// Candidates without an input for the model's space.
    pub skipped: Vec<u64>,
    pub applied: usize,
}

/// Trains the network and the k-NN baseline and scores both on the
/// validation side. Touches no store state.
pub fn run_training(set: TrainingSet) -> Result<Trained> {
    let req = &set.request;
    let classes = set.dataset.classes();
    let heads = match req.target {
        Target::Category => HeadKind::Classifier(classes),
        Target::Rank => HeadKind::Regressor,
        Target::Both => HeadKind::Both(classes),
    };
    let init = Mlp::init(set.dataset.input_dim(), req.hidden, heads, req.config.seed)?;
    let (model, history) = mlp_train(init, &set.dataset, &req.config)?;
    let metrics = evaluate(&model, &set.dataset)?;
    let knn = knn_fit(&set.dataset, req.knn_k)?;
    let knn_metrics = evaluate(&knn, &set.dataset)?;
    Ok(Trained {
        set,
        model,
        history,
        metrics,
        knn_metrics,
    })
}

impl Store {
    /// Inputs of one record in the given space, if available.
    pub(crate) fn input_of(&self, id: u64, space: SourceSpace) -> Result<Option<Vec<f64>>> {
        Ok(match space {
            SourceSpace::Genotype => Some(self.record(id)?.genotype.u().to_vec()),
            SourceSpace::Feature => self.features(id)?.map(|v| v.into_values()),
        })
    }

    /// Rows from human-judged records (and predicted ones with
    /// `include_pseudo`) that carry the requested labels and are assigned a
    /// split side.
    pub fn training_set(&self, req: &TrainRequest) -> Result<TrainingSet> {
        let split = self.split.as_ref().ok_or(StoreError::NoSplit)?;
        if req.knn_k == 0 {
            return Err(StoreError::Invalid("knn_k must be at least 1".into()));
        }
        let eligible: Vec<_> = self
            .records()
            .filter(|r| r.provenance == Provenance::Human || req.include_pseudo)
            .filter(|r| {
                (req.target.wants_category() && r.category.is_some())
                    || (req.target.wants_rank() && r.rank.is_some())
            })
            .collect();
        let label_names: Vec<String> = if req.target.wants_category() {
            self.taxonomy
                .names()
                .iter()
                .filter(|n| eligible.iter().any(|r| r.category.as_ref() == Some(n)))
                .cloned()
                .collect()
        } else {
            Vec::new()
        };
        let mut rows = Vec::new();
        let mut ids = Vec::new();
        let mut unassigned = 0;
        for r in eligible {
            let Some(side) = split.side(r.id) else {
                unassigned += 1;
                continue;
            };
            let input = self.input_of(r.id, req.space)?.ok_or_else(|| {
                StoreError::Invalid(format!("record {} has no feature vector", r.id))
            })?;
            let category = req
                .target
                .wants_category()
                .then(|| {
                    r.category
                        .as_ref()
                        .and_then(|c| label_names.iter().position(|n| n == c))
                })
                .flatten();
            let rank = req
                .target
                .wants_rank()
                .then(|| r.rank.map(f64::from))
                .flatten();
            rows.push(Row {
                input,
                category,
                rank,
                split: side,
            });
            ids.push(r.id);
        }
        let train = rows.iter().filter(|r| r.split == Split::Train).count();
        let validation = rows.len() - train;
        if train < MIN_ROWS_PER_SIDE || validation < MIN_ROWS_PER_SIDE {
            return Err(StoreError::InsufficientLabels {
                needed: MIN_ROWS_PER_SIDE,
                train,
                validation,
            });
        }
        if let Some(d) = rows.first().map(|r| r.input.len()) {
            if let Some(bad) = rows.iter().position(|r| r.input.len() != d) {
                return Err(StoreError::Invalid(format!(
                    "feature vectors have mixed dimensions: record {} has {}, record {} has {d}",
                    ids[bad],
                    rows[bad].input.len(),
                    ids[0]
                )));
            }
        }
        let dataset = Dataset::new(rows, label_names)?;
        Ok(TrainingSet {
            request: req.clone(),
            dataset,
            ids,
            unassigned,
        })
    }

    /// Stores the checkpoint and its description under the next model id.
    pub fn save_model(&mut self, trained: Trained) -> Result<ModelInfo> {
        let id = self.models.keys().next_back().map_or(1, |k| k + 1);
        let ds = &trained.set.dataset;
        let info = ModelInfo {
            id,
            space: trained.set.request.space,
            target: trained.set.request.target,
            include_pseudo: trained.set.request.include_pseudo,
            input_dim: ds.input_dim(),
            label_names: trained.model.label_names().to_vec(),
            train_rows: ds.train().count(),
            validation_rows: ds.validation().count(),
            epochs_run: trained.history.train_loss.len(),
            best_epoch: trained.history.best_epoch,
            created: Utc::now(),
            metrics: trained.metrics.clone(),
            knn_k: trained.set.request.knn_k,
            knn_metrics: trained.knn_metrics,
        };
        self.write_model(info, trained.model)
    }

    /// Registers a model built or trained elsewhere. It carries no metrics.
    pub fn add_model(&mut self, model: Mlp, space: SourceSpace) -> Result<ModelInfo> {
        let target = match model.heads() {
            HeadKind::Classifier(_) => Target::Category,
            HeadKind::Regressor => Target::Rank,
            HeadKind::Both(_) => Target::Both,
        };
        let id = self.models.keys().next_back().map_or(1, |k| k + 1);
        let info = ModelInfo {
            id,
            space,
            target,
            include_pseudo: false,
            input_dim: model.input_dim(),
            label_names: if model.classifier().is_some() {
                model.label_names().to_vec()
            } else {
                Vec::new()
            },
            train_rows: 0,
            validation_rows: 0,
            epochs_run: model.manifest().epochs_run,
            best_epoch: model.manifest().best_epoch,
            created: Utc::now(),
            metrics: Metrics::default(),
            knn_k: 0,
            knn_metrics: Metrics::default(),
        };
        self.write_model(info, model)
    }

    fn write_model(&mut self, info: ModelInfo, model: Mlp) -> Result<ModelInfo> {
        let dir = self.model_dir(info.id);
        save_checkpoint(&model, Some(&info.metrics), &dir)?;
        fs::write(dir.join(MODEL_INFO_FILE), serde_json::to_vec_pretty(&info)?)?;
        self.models.insert(
            info.id,
            StoredModel {
                info: info.clone(),
                model: Arc::new(model),
            },
        );
        Ok(info)
    }

    pub fn train_job(&mut self, req: &TrainRequest) -> Result<ModelInfo> {
        let trained = run_training(self.training_set(req)?)?;
        self.save_model(trained)
    }

    pub(crate) fn load_models(&mut self) -> Result<()> {
        for entry in fs::read_dir(self.root().join(MODELS_DIR))? {
            let dir = entry?.path();
            let info_path = dir.join(MODEL_INFO_FILE);
            if !info_path.exists() {
                continue;
            }
            let info: ModelInfo = serde_json::from_slice(&fs::read(info_path)?)?;
            let (model, _) = load_checkpoint::<f64>(&dir)?;
            self.models.insert(
                info.id,
                StoredModel {
                    info,
                    model: Arc::new(model),
                },
            );
        }
        Ok(())
    }

    pub fn models(&self) -> impl Iterator<Item = &ModelInfo> {
        self.models.values().map(|m| &m.info)
    }

    pub fn model(&self, id: u64) -> Result<(&ModelInfo, Arc<Mlp>)> {
        let m = self.models.get(&id).ok_or(StoreError::UnknownModel(id))?;
        Ok((&m.info, m.model.clone()))
    }

    /// Input vector for a model. Feature-space models with builtin-sized
    /// inputs accept genotypes by growing them with `seed`.
    pub fn model_input(
        &self,
        info: &ModelInfo,
        input: &PredictInput,
        seed: u64,
    ) -> Result<Vec<f64>> {
        match (input, info.space) {
            (PredictInput::Record(id), space) => self
                .input_of(*id, space)?
                .ok_or_else(|| StoreError::Invalid(format!("record {id} has no feature vector"))),
            (PredictInput::Genotype(u), SourceSpace::Genotype) => Ok(genotype_from_unit(u)
                .map_err(StoreError::Invalid)?
                .u()
                .to_vec()),
            (PredictInput::Genotype(u), SourceSpace::Feature) if info.input_dim == BUILTIN_DIM => {
                let g = genotype_from_unit(u).map_err(StoreError::Invalid)?;
                // stored vectors are single precision, so match them
                Ok(ingest(&g, seed)
                    .features
                    .into_values()
                    .into_iter()
                    .map(|v| v as f32 as f64)
                    .collect())
            }
            (PredictInput::Genotype(_), SourceSpace::Feature) => Err(StoreError::Invalid(format!(
                "model {} takes imported {}-dimensional features, not a genotype",
                info.id, info.input_dim
            ))),
        }
    }

    pub fn predict(
        &self,
        model_id: u64,
        input: &PredictInput,
        seed: u64,
    ) -> Result<PredictionReport> {
        let (info, model) = self.model(model_id)?;
        let x = self.model_input(info, input, seed)?;
        let p = model.predict(&x)?;
        Ok(PredictionReport {
            model_id,
            category: p.category().and_then(|c| info.label_names.get(c).cloned()),
            probabilities: p.distribution.as_ref().map(|d| d.probs().to_vec()),
            margin: p.margin(),
            rank: p.rank,
        })
    }

    /// Proposes categories for unlabeled records whose margin is at least
    /// `tau`.
    pub fn propose_labels(&self, model_id: u64, tau: f64) -> Result<PseudoReport> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(StoreError::Invalid(format!("tau {tau} outside [0, 1]")));
        }
        let (info, model) = self.model(model_id)?;
        if model.classifier().is_none() {
            return Err(StoreError::Invalid(format!(
                "model {model_id} has no category head"
            )));
        }
        let candidates: Vec<u64> = self
            .records()
            .filter(|r| !r.is_labeled())
            .map(|r| r.id)
            .collect();
        let inputs = candidates
            .iter()
            .map(|&id| Ok((id, self.input_of(id, info.space)?)))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<(u64, Option<&[f64]>)> =
            inputs.iter().map(|(id, x)| (*id, x.as_deref())).collect();
        let labels = pseudo_label(model.as_ref(), &refs, tau)?;
        Ok(PseudoReport {
            proposals: labels
                .proposals
                .iter()
                .map(|p| LabelProposal {
                    id: p.id,
                    category: info.label_names[p.label].clone(),
                    margin: p.margin,
                })
                .collect(),
            skipped: labels.skipped,
            applied: 0,
        })
    }

    /// Writes proposals as predicted-provenance categories. Records labeled
    /// since the proposal was made are left alone.
    pub fn apply_labels(&mut self, report: &mut PseudoReport) -> Result<()> {
        let now = Utc::now();
        let mut applied = 0;
        for p in &report.proposals {
            let Some(r) = self.records.get(&p.id) else {
                continue;
            };
            if r.is_labeled() {
                continue;
            }
            self.taxonomy.ensure(&p.category)?;
            let r = self.records.get_mut(&p.id).expect("looked up above");
            r.category = Some(p.category.clone());
            r.provenance = Provenance::Predicted;
            r.modified = now.max(r.modified);
            applied += 1;
        }
        if applied > 0 {
            self.save_taxonomy()?;
            self.save_records()?;
        }
        report.applied = applied;
        Ok(())
    }

    pub fn pseudo_label(&mut self, model_id: u64, tau: f64, apply: bool) -> Result<PseudoReport> {
        let mut report = self.propose_labels(model_id, tau)?;
        if apply {
            self.apply_labels(&mut report)?;
        }
        Ok(report)
    }
}
