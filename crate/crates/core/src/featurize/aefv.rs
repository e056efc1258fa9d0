//! AEFV feature files.
//!
//! ```text
//! "AEFV"  version:u8 = 1  count:u32le  dim:u32le
//! count x { id:u64le  dim x f32le }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{FeatureSource, FeatureVector};

pub const AEFV_MAGIC: &[u8; 4] = b"AEFV";
pub const AEFV_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum AefvError {
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported AEFV version {0}")]
    Version(u8),
    #[error("truncated payload: expected {expected} records, read {read}")]
    Truncated { expected: usize, read: usize },
    #[error("record ids do not match: missing {missing:?}, unexpected {unexpected:?}")]
    IdMismatch {
        missing: Vec<u64>,
        unexpected: Vec<u64>,
    },
    #[error("record {0} appears more than once")]
    DuplicateId(u64),
    #[error("record {0} has non-finite values")]
    NonFinite(u64),
    #[error("vectors have mixed dimensions ({0} and {1})")]
    MixedDims(usize, usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_features<W: Write>(
    mut w: W,
    records: &[(u64, &FeatureVector)],
) -> Result<(), AefvError> {
    let dim = records.first().map_or(0, |(_, v)| v.dim());
    if let Some((_, v)) = records.iter().find(|(_, v)| v.dim() != dim) {
        return Err(AefvError::MixedDims(dim, v.dim()));
    }
    w.write_all(AEFV_MAGIC)?;
    w.write_all(&[AEFV_VERSION])?;
    w.write_all(&(records.len() as u32).to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    for (id, v) in records {
        w.write_all(&id.to_le_bytes())?;
        for &x in v.values() {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_features_file(
    path: impl AsRef<Path>,
    records: &[(u64, &FeatureVector)],
) -> Result<(), AefvError> {
    write_features(BufWriter::new(File::create(path)?), records)
}

/// Reads every record. With `expected`, the file's id set must equal it.
/// Values are widened from f32, so imported vectors carry f32 precision.
pub fn read_features<R: Read>(
    mut r: R,
    expected: Option<&[u64]>,
) -> Result<BTreeMap<u64, FeatureVector>, AefvError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != AEFV_MAGIC {
        return Err(AefvError::BadMagic(magic));
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version)?;
    if version[0] != AEFV_VERSION {
        return Err(AefvError::Version(version[0]));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let count = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let dim = u32::from_le_bytes(word) as usize;

    let mut out = BTreeMap::new();
    let mut record = vec![0u8; 8 + 4 * dim];
    for read in 0..count {
        r.read_exact(&mut record).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => AefvError::Truncated {
                expected: count,
                read,
            },
            _ => AefvError::Io(e),
        })?;
        let id = u64::from_le_bytes(record[..8].try_into().unwrap());
        let values = record[8..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        let v =
            FeatureVector::new(values, FeatureSource::Imported).ok_or(AefvError::NonFinite(id))?;
        if out.insert(id, v).is_some() {
            return Err(AefvError::DuplicateId(id));
        }
    }
    if let Some(expected) = expected {
        let want: BTreeSet<u64> = expected.iter().copied().collect();
        let missing: Vec<u64> = want
            .iter()
            .filter(|id| !out.contains_key(id))
            .copied()
            .collect();
        let unexpected: Vec<u64> = out
            .keys()
            .filter(|id| !want.contains(id))
            .copied()
            .collect();
        if !missing.is_empty() || !unexpected.is_empty() {
            return Err(AefvError::IdMismatch {
                missing,
                unexpected,
            });
        }
    }
    Ok(out)
}

pub fn read_features_file(
    path: impl AsRef<Path>,
    expected: Option<&[u64]>,
) -> Result<BTreeMap<u64, FeatureVector>, AefvError> {
    read_features(BufReader::new(File::open(path)?), expected)
}
