//! Single-directory population store. `records.csv` is authoritative;
//! images, feature vectors and model checkpoints live beside it.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use formscape_core::featurize::{
    extract_features, read_features_file, write_features, AefvError, FeatureVector,
};
use formscape_core::morphogen::{
    classify_empty, phenotype, Genotype, Image, DEFAULT_BUDGET, DEFAULT_RESOLUTION,
};
use formscape_core::predict::PredictError;
use formscape_core::{embed::EmbedError, explore::ExploreError, Mlp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::{
    read_records, write_records, PhenotypeRecord, Provenance, RecordError, MAX_RANK,
};
use crate::split::{stratified_split, SplitAssignment, SplitError};
use crate::taxonomy::{Taxonomy, TaxonomyError, EMPTY_CATEGORY};
use crate::training::ModelInfo;

pub const RECORDS_FILE: &str = "records.csv";
pub const TAXONOMY_FILE: &str = "taxonomy.txt";
pub const SPLIT_FILE: &str = "split.json";
pub const LOCK_FILE: &str = ".lock";
pub const IMAGES_DIR: &str = "images";
pub const FEATURES_DIR: &str = "features";
pub const MODELS_DIR: &str = "models";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store is locked by another process (remove {0} if none is running)")]
    Locked(PathBuf),
    #[error("unknown record {0}")]
    UnknownRecord(u64),
    #[error("unknown model {0}")]
    UnknownModel(u64),
    #[error("rank {0} outside [0, {MAX_RANK}]")]
    RankOutOfRange(i64),
    #[error("{0}")]
    Invalid(String),
    #[error("no split assigned; run a split first")]
    NoSplit,
    #[error("need at least {needed} labeled rows per side, have {train} training and {validation} validation")]
    InsufficientLabels {
        needed: usize,
        train: usize,
        validation: usize,
    },
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Records(#[from] RecordError),
    #[error("features: {0}")]
    Features(#[from] AefvError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    NotFound,
    Invalid,
    Conflict,
    Internal,
}

impl StoreError {
    pub fn kind(&self) -> ErrorKind {
        use StoreError::*;
        match self {
            UnknownRecord(_) | UnknownModel(_) => ErrorKind::NotFound,
            Locked(_) => ErrorKind::Conflict,
            Io(_) | Json(_) => ErrorKind::Internal,
            Predict(PredictError::Io(_) | PredictError::Checkpoint(_)) => ErrorKind::Internal,
            Features(AefvError::Io(_))
            | Embed(EmbedError::Io(_))
            | Explore(ExploreError::Io(_)) => ErrorKind::Internal,
            _ => ErrorKind::Invalid,
        }
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// Held for the lifetime of a [`Store`]; the file is removed on drop.
#[derive(Debug)]
struct LockFile(PathBuf);

impl LockFile {
    fn acquire(path: PathBuf) -> Result<Self> {
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(Self(path))
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(StoreError::Locked(path)),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for LockFile {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Writes through a temporary file and a rename, so readers of the
/// directory never see a partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = BufWriter::new(File::create(&tmp)?);
        f.write_all(bytes)?;
        f.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// A grown, rendered and featurized genotype, not yet stored.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub genotype: Genotype,
    pub seed: u64,
    pub growth_viable: bool,
    pub empty: bool,
    pub image: Image,
    pub features: FeatureVector,
}

/// Grows at the default budget and renders at the default resolution.
pub fn ingest(genotype: &Genotype, seed: u64) -> Ingested {
    let (growth, image) = phenotype(genotype, seed, DEFAULT_BUDGET, DEFAULT_RESOLUTION)
        .expect("default resolution is supported");
    Ingested {
        genotype: genotype.clone(),
        seed,
        growth_viable: growth.viable,
        empty: classify_empty(&image),
        features: extract_features(&image),
        image,
    }
}

pub fn ingest_all(items: &[(Genotype, u64)]) -> Vec<Ingested> {
    items.par_iter().map(|(g, s)| ingest(g, *s)).collect()
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
pub struct RecordFilter {
    pub category: Option<String>,
    pub min_rank: Option<u8>,
    pub max_rank: Option<u8>,
    pub provenance: Option<Provenance>,
}

impl RecordFilter {
    pub fn matches(&self, r: &PhenotypeRecord) -> bool {
        if self.category.is_some() && r.category != self.category {
            return false;
        }
        if self.provenance.is_some_and(|p| p != r.provenance) {
            return false;
        }
        if self.min_rank.is_some() || self.max_rank.is_some() {
            let Some(rank) = r.rank else { return false };
            if self.min_rank.is_some_and(|m| rank < m) || self.max_rank.is_some_and(|m| rank > m) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checked: usize,
    pub mismatched: Vec<u64>,
    pub missing: Vec<u64>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.mismatched.is_empty() && self.missing.is_empty()
    }
}

#[derive(Debug)]
pub(crate) struct StoredModel {
    pub info: ModelInfo,
    pub model: Arc<Mlp>,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    pub(crate) records: BTreeMap<u64, PhenotypeRecord>,
    pub(crate) taxonomy: Taxonomy,
    pub(crate) split: Option<SplitAssignment>,
    pub(crate) models: BTreeMap<u64, StoredModel>,
    next_id: u64,
    _lock: LockFile,
}

impl Store {
    /// Opens the store at `root`, creating the layout if absent, and takes
    /// the single-writer lock.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        for dir in [IMAGES_DIR, FEATURES_DIR, MODELS_DIR] {
            fs::create_dir_all(root.join(dir))?;
        }
        let lock = LockFile::acquire(root.join(LOCK_FILE))?;
        let records_path = root.join(RECORDS_FILE);
        let records = if records_path.exists() {
            read_records(BufReader::new(File::open(&records_path)?))?
        } else {
            Vec::new()
        };
        let taxonomy = match fs::read_to_string(root.join(TAXONOMY_FILE)) {
            Ok(text) => Taxonomy::from_text(&text)?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Taxonomy::default(),
            Err(e) => return Err(e.into()),
        };
        let split = match fs::read(root.join(SPLIT_FILE)) {
            Ok(bytes) => Some(serde_json::from_slice(&bytes)?),
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        let mut store = Self {
            next_id: records.iter().map(|r| r.id + 1).max().unwrap_or(1),
            records: records.into_iter().map(|r| (r.id, r)).collect(),
            taxonomy,
            split,
            models: BTreeMap::new(),
            root,
            _lock: lock,
        };
        store.load_models()?;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn split(&self) -> Option<&SplitAssignment> {
        self.split.as_ref()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &PhenotypeRecord> {
        self.records.values()
    }

    pub fn record(&self, id: u64) -> Result<&PhenotypeRecord> {
        self.records.get(&id).ok_or(StoreError::UnknownRecord(id))
    }

    pub fn query(&self, filter: &RecordFilter) -> Vec<&PhenotypeRecord> {
        self.records
            .values()
            .filter(|r| filter.matches(r))
            .collect()
    }

    pub fn image(&self, id: u64) -> Result<Image> {
        let r = self.record(id)?;
        Ok(Image::read_pgm(BufReader::new(File::open(
            self.root.join(&r.image_path),
        )?))?)
    }

    pub fn features(&self, id: u64) -> Result<Option<FeatureVector>> {
        let r = self.record(id)?;
        let Some(path) = &r.features_path else {
            return Ok(None);
        };
        let mut map = read_features_file(self.root.join(path), Some(&[id]))?;
        Ok(map.remove(&id))
    }

    fn image_rel(id: u64) -> String {
        format!("{IMAGES_DIR}/{id:08}.pgm")
    }

    fn features_rel(id: u64) -> String {
        format!("{FEATURES_DIR}/{id:08}.aefv")
    }

    fn write_feature_file(&self, id: u64, v: &FeatureVector) -> Result<String> {
        let rel = Self::features_rel(id);
        let mut bytes = Vec::new();
        write_features(&mut bytes, &[(id, v)])?;
        write_atomic(&self.root.join(&rel), &bytes)?;
        Ok(rel)
    }

    pub(crate) fn save_records(&self) -> Result<()> {
        let mut bytes = Vec::new();
        write_records(self.records.values(), &mut bytes)?;
        write_atomic(&self.root.join(RECORDS_FILE), &bytes)?;
        Ok(())
    }

    pub(crate) fn save_taxonomy(&self) -> Result<()> {
        write_atomic(
            &self.root.join(TAXONOMY_FILE),
            self.taxonomy.to_text().as_bytes(),
        )?;
        Ok(())
    }

    /// Taxonomy first, so stored records never name an unknown category.
    fn save_labels(&self) -> Result<()> {
        self.save_taxonomy()?;
        self.save_records()
    }

    /// Stores already-ingested phenotypes as new records. Empty forms get
    /// category "empty", rank 0 and predicted provenance.
    pub fn commit(&mut self, items: Vec<Ingested>) -> Result<Vec<PhenotypeRecord>> {
        let now = Utc::now();
        let mut added = Vec::with_capacity(items.len());
        for item in items {
            let id = self.next_id;
            let image_path = Self::image_rel(id);
            write_atomic(&self.root.join(&image_path), &item.image.to_pgm())?;
            let features_path = self.write_feature_file(id, &item.features)?;
            let (rank, category) = if item.empty {
                self.taxonomy.ensure(EMPTY_CATEGORY)?;
                (Some(0), Some(EMPTY_CATEGORY.to_string()))
            } else {
                (None, None)
            };
            let record = PhenotypeRecord {
                id,
                genotype: item.genotype,
                seed: item.seed,
                image_path,
                features_path: Some(features_path),
                rank,
                category,
                provenance: Provenance::Predicted,
                viable: item.growth_viable && !item.empty,
                rank_forced: false,
                created: now,
                modified: now,
            };
            self.next_id += 1;
            self.records.insert(id, record.clone());
            added.push(record);
        }
        self.save_labels()?;
        Ok(added)
    }

    /// Grows, renders, featurizes and stores one genotype.
    pub fn add_record(&mut self, genotype: &Genotype, seed: u64) -> Result<PhenotypeRecord> {
        let mut added = self.commit(vec![ingest(genotype, seed)])?;
        Ok(added.remove(0))
    }

    /// Records a human judgement. A new category is added to the taxonomy;
    /// rank 0 on a viable form is recorded as forced.
    pub fn submit_judgement(
        &mut self,
        id: u64,
        rank: Option<i64>,
        category: Option<&str>,
    ) -> Result<PhenotypeRecord> {
        let rank = rank
            .map(|r| {
                u8::try_from(r)
                    .ok()
                    .filter(|&v| v <= MAX_RANK)
                    .ok_or(StoreError::RankOutOfRange(r))
            })
            .transpose()?;
        let record = self.records.get(&id).ok_or(StoreError::UnknownRecord(id))?;
        let mut updated = record.clone();
        if let Some(c) = category {
            crate::record::check_label(c).map_err(StoreError::Invalid)?;
            updated.category = Some(c.to_string());
        }
        if let Some(r) = rank {
            updated.rank = Some(r);
            updated.rank_forced = r == 0 && updated.viable;
        }
        updated.provenance = Provenance::Human;
        updated.modified = bump(updated.modified);
        if let Some(c) = category {
            self.taxonomy.ensure(c)?;
        }
        self.records.insert(id, updated.clone());
        self.save_labels()?;
        Ok(updated)
    }

    /// Assigns every labeled record to training or validation.
    pub fn split_dataset(&mut self, ratio: f64, seed: u64) -> Result<&SplitAssignment> {
        let items: Vec<(u64, Option<&str>)> = self
            .records
            .values()
            .filter(|r| r.is_labeled())
            .map(|r| (r.id, r.category.as_deref()))
            .collect();
        let split = stratified_split(&items, ratio, seed)?;
        write_atomic(
            &self.root.join(SPLIT_FILE),
            &serde_json::to_vec_pretty(&split)?,
        )?;
        Ok(self.split.insert(split))
    }

    pub fn export_dataset(&self, path: impl AsRef<Path>) -> Result<usize> {
        let mut bytes = Vec::new();
        write_records(self.records.values(), &mut bytes)?;
        fs::write(path, bytes)?;
        Ok(self.records.len())
    }

    /// Validates every row before changing anything. Ids must be new to the
    /// store; categories are added to the taxonomy.
    pub fn import_dataset(&mut self, path: impl AsRef<Path>) -> Result<usize> {
        let rows = read_records(BufReader::new(File::open(path)?))?;
        let mut taxonomy = self.taxonomy.clone();
        for (n, r) in rows.iter().enumerate() {
            if self.records.contains_key(&r.id) {
                return Err(RecordError::Row {
                    row: n + 1,
                    reason: format!("id {} already in the store", r.id),
                }
                .into());
            }
            if let Some(c) = &r.category {
                taxonomy.ensure(c)?;
            }
        }
        let count = rows.len();
        self.taxonomy = taxonomy;
        for r in rows {
            self.next_id = self.next_id.max(r.id + 1);
            self.records.insert(r.id, r);
        }
        self.save_labels()?;
        Ok(count)
    }

    /// Replaces the feature vectors of the records named in an AEFV file.
    pub fn import_features(&mut self, path: impl AsRef<Path>) -> Result<usize> {
        let vectors = read_features_file(path, None)?;
        let unexpected: Vec<u64> = vectors
            .keys()
            .filter(|id| !self.records.contains_key(id))
            .copied()
            .collect();
        if !unexpected.is_empty() {
            return Err(AefvError::IdMismatch {
                missing: Vec::new(),
                unexpected,
            }
            .into());
        }
        for (id, v) in &vectors {
            let rel = self.write_feature_file(*id, v)?;
            self.records
                .get_mut(id)
                .expect("checked above")
                .features_path = Some(rel);
        }
        self.save_records()?;
        Ok(vectors.len())
    }

    /// Recomputes builtin features from the stored images of every record.
    pub fn extract_features(&mut self) -> Result<usize> {
        let ids: Vec<u64> = self.records.keys().copied().collect();
        let vectors = ids
            .par_iter()
            .map(|&id| self.image(id).map(|img| (id, extract_features(&img))))
            .collect::<Result<Vec<_>>>()?;
        for (id, v) in &vectors {
            let rel = self.write_feature_file(*id, v)?;
            self.records
                .get_mut(id)
                .expect("listed above")
                .features_path = Some(rel);
        }
        self.save_records()?;
        Ok(vectors.len())
    }

    /// Writes the feature vectors of every record that has one into a
    /// single AEFV file.
    pub fn export_features(&self, path: impl AsRef<Path>) -> Result<usize> {
        let mut vectors = Vec::new();
        for id in self.records.keys() {
            if let Some(v) = self.features(*id)? {
                vectors.push((*id, v));
            }
        }
        let refs: Vec<(u64, &FeatureVector)> = vectors.iter().map(|(id, v)| (*id, v)).collect();
        write_features(BufWriter::new(File::create(path)?), &refs)?;
        Ok(vectors.len())
    }

    /// Re-renders every record and compares image hashes with the stored files.
    pub fn verify(&self) -> VerifyReport {
        let outcomes: Vec<(u64, Option<bool>)> = self
            .records
            .values()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|r| {
                let stored = File::open(self.root.join(&r.image_path))
                    .and_then(|f| Image::read_pgm(BufReader::new(f)));
                let ok = stored.ok().map(|img| {
                    img.content_hash() == ingest(&r.genotype, r.seed).image.content_hash()
                });
                (r.id, ok)
            })
            .collect();
        let mut report = VerifyReport {
            checked: outcomes.len(),
            ..Default::default()
        };
        for (id, ok) in outcomes {
            match ok {
                None => report.missing.push(id),
                Some(false) => report.mismatched.push(id),
                Some(true) => {}
            }
        }
        report
    }

    pub(crate) fn model_dir(&self, id: u64) -> PathBuf {
        self.root.join(MODELS_DIR).join(id.to_string())
    }
}

/// Current time, strictly after `previous`.
fn bump(previous: DateTime<Utc>) -> DateTime<Utc> {
    let now = Utc::now();
    if now > previous {
        now
    } else {
        previous + Duration::nanoseconds(1)
    }
}
