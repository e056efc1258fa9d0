//! Phenotype records and their CSV form, shared by `records.csv` and
//! dataset export/import.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use formscape_core::morphogen::{Genotype, PARAMS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_RANK: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Human,
    Predicted,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Human => "human",
            Provenance::Predicted => "predicted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "human" => Some(Provenance::Human),
            "predicted" => Some(Provenance::Predicted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenotypeRecord {
    pub id: u64,
    #[serde(with = "unit_genotype")]
    pub genotype: Genotype,
    pub seed: u64,
    /// Relative to the store root.
    pub image_path: String,
    pub features_path: Option<String>,
    pub rank: Option<u8>,
    pub category: Option<String>,
    pub provenance: Provenance,
    pub viable: bool,
    /// Rank 0 on a viable form was set explicitly rather than inferred.
    pub rank_forced: bool,
    pub created: DateTime<Utc>,
    pub modified: DateTime<Utc>,
}

impl PhenotypeRecord {
    pub fn is_labeled(&self) -> bool {
        self.rank.is_some() || self.category.is_some()
    }

    pub fn check(&self) -> Result<(), String> {
        if let Some(r) = self.rank {
            if r > MAX_RANK {
                return Err(format!("rank {r} outside [0, {MAX_RANK}]"));
            }
            if r == 0 && self.viable && !self.rank_forced {
                return Err("rank 0 on a viable form must be forced".into());
            }
        }
        if let Some(c) = &self.category {
            check_label(c)?;
        }
        if self.image_path.is_empty() {
            return Err("empty image_path".into());
        }
        if self.modified < self.created {
            return Err("modified precedes created".into());
        }
        Ok(())
    }
}

/// Category names must be nonempty single-line text without surrounding
/// whitespace.
pub fn check_label(name: &str) -> Result<(), String> {
    if name.is_empty() {
        return Err("empty category name".into());
    }
    if name.trim() != name || name.contains(['\n', '\r']) {
        return Err(format!(
            "category {name:?} has surrounding whitespace or line breaks"
        ));
    }
    Ok(())
}

/// Unit-box coordinates, rejecting anything outside [0, 1].
pub fn genotype_from_unit(u: &[f64]) -> Result<Genotype, String> {
    if u.len() != PARAMS {
        return Err(format!(
            "expected {PARAMS} genotype values, got {}",
            u.len()
        ));
    }
    if let Some(i) = u.iter().position(|x| !(0.0..=1.0).contains(x)) {
        return Err(format!("u{i} = {} outside [0, 1]", u[i]));
    }
    Genotype::from_unit(std::array::from_fn(|i| u[i])).map_err(|e| e.to_string())
}

mod unit_genotype {
    use super::*;
    use serde::de::Error;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(g: &Genotype, s: S) -> Result<S::Ok, S::Error> {
        g.u().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Genotype, D::Error> {
        let u = Vec::<f64>::deserialize(d)?;
        genotype_from_unit(&u).map_err(D::Error::custom)
    }
}

pub fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("missing column {0}")]
    MissingColumn(String),
    /// `row` is 1-based and excludes the header.
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub fn header() -> Vec<String> {
    let mut h = vec!["id".to_string()];
    h.extend((0..PARAMS).map(|i| format!("u{i}")));
    h.extend(
        [
            "seed",
            "image_path",
            "features_path",
            "rank",
            "category",
            "provenance",
            "viable",
            "created",
            "modified",
            "rank_forced",
        ]
        .map(String::from),
    );
    h
}

pub fn write_records<'a, W: Write>(
    records: impl IntoIterator<Item = &'a PhenotypeRecord>,
    w: W,
) -> Result<(), RecordError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header())?;
    for r in records {
        let mut row = vec![r.id.to_string()];
        row.extend(r.genotype.u().iter().map(|u| u.to_string()));
        row.push(r.seed.to_string());
        row.push(r.image_path.clone());
        row.push(r.features_path.clone().unwrap_or_default());
        row.push(r.rank.map(|v| v.to_string()).unwrap_or_default());
        row.push(r.category.clone().unwrap_or_default());
        row.push(r.provenance.as_str().into());
        row.push(r.viable.to_string());
        row.push(timestamp(&r.created));
        row.push(timestamp(&r.modified));
        row.push(r.rank_forced.to_string());
        out.write_record(&row)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Parses and validates every row; the first bad row aborts the read.
/// `rank_forced` may be absent and then defaults to false.
pub fn read_records<R: Read>(r: R) -> Result<Vec<PhenotypeRecord>, RecordError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(r);
    let headers = reader.headers()?.clone();
    let position = |name: &str| headers.iter().position(|h| h == name);
    let mut columns = Vec::new();
    for name in header() {
        match position(&name) {
            Some(i) => columns.push(Some(i)),
            None if name == "rank_forced" => columns.push(None),
            None => return Err(RecordError::MissingColumn(name)),
        }
    }
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (n, row) in reader.records().enumerate() {
        let row_no = n + 1;
        let fail = |reason: String| RecordError::Row {
            row: row_no,
            reason,
        };
        let row = row.map_err(|e| fail(e.to_string()))?;
        let field = |k: usize| columns[k].and_then(|i| row.get(i)).unwrap_or("");
        let record = parse_row(&field).map_err(fail)?;
        if !ids.insert(record.id) {
            return Err(fail(format!("duplicate id {}", record.id)));
        }
        out.push(record);
    }
    Ok(out)
}

fn parse_row<'a>(field: &dyn Fn(usize) -> &'a str) -> Result<PhenotypeRecord, String> {
    fn num<T: std::str::FromStr>(name: &str, s: &str) -> Result<T, String> {
        s.parse().map_err(|_| format!("{name}: cannot parse {s:?}"))
    }
    fn optional(s: &str) -> Option<String> {
        (!s.is_empty()).then(|| s.to_string())
    }
    fn time(name: &str, s: &str) -> Result<DateTime<Utc>, String> {
        DateTime::parse_from_rfc3339(s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| format!("{name}: {e}"))
    }
    let id = num("id", field(0))?;
    let u = (0..PARAMS)
        .map(|i| num::<f64>(&format!("u{i}"), field(1 + i)))
        .collect::<Result<Vec<_>, _>>()?;
    let k = 1 + PARAMS;
    let rank = match field(k + 3) {
        "" => None,
        s => Some(num::<u8>("rank", s).map_err(|_| format!("rank {s:?} outside [0, {MAX_RANK}]"))?),
    };
    let record = PhenotypeRecord {
        id,
        genotype: genotype_from_unit(&u)?,
        seed: num("seed", field(k))?,
        image_path: field(k + 1).to_string(),
        features_path: optional(field(k + 2)),
        rank,
        category: optional(field(k + 4)),
        provenance: Provenance::parse(field(k + 5))
            .ok_or_else(|| format!("provenance {:?} is not human or predicted", field(k + 5)))?,
        viable: num("viable", field(k + 6))?,
        created: time("created", field(k + 7))?,
        modified: time("modified", field(k + 8))?,
        rank_forced: match field(k + 9) {
            "" => false,
            s => num("rank_forced", s)?,
        },
    };
    record.check()?;
    Ok(record)
}
