use super::{EmbedError, EmbeddingLayout};
use crate::fmt::g12;
use crate::Scalar;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// Score bands used when colouring plots by rank.
pub const SCORE_BANDS: [&str; 5] = ["0-1", "2-3", "4-5", "6-7", "8-10"];

/// Index into [`SCORE_BANDS`] for an integer rank 0–10.
pub fn score_band(rank: u8) -> usize {
    (rank.min(10) as usize / 2).min(4)
}

/// Per-record metadata joined to layout rows on export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutRow {
    pub id: u64,
    pub category: Option<String>,
    pub rank: Option<u8>,
}

const HEADER: [&str; 5] = ["id", "x", "y", "category", "rank"];

/// Writes `id,x,y,category,rank` rows. Metadata must list the layout's ids
/// in row order; coordinates carry 12 significant digits.
pub fn layout_export<T: Scalar, W: Write>(
    layout: &EmbeddingLayout<T>,
    meta: &[LayoutRow],
    w: W,
) -> Result<(), EmbedError> {
    if meta.len() != layout.len() {
        return Err(EmbedError::IdCount(meta.len(), layout.len()));
    }
    for (row, (m, &id)) in meta.iter().zip(&layout.ids).enumerate() {
        if m.id != id {
            return Err(EmbedError::IdMismatch {
                row,
                expected: id,
                found: m.id,
            });
        }
    }
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| EmbedError::Csv(e.to_string());
    out.write_record(HEADER).map_err(csv_err)?;
    for (m, c) in meta.iter().zip(&layout.coords) {
        out.write_record([
            m.id.to_string(),
            g12(c[0].as_f64()),
            g12(c[1].as_f64()),
            m.category.clone().unwrap_or_default(),
            m.rank.map(|r| r.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a layout CSV back into metadata and coordinates.
pub fn layout_parse<R: Read>(r: R) -> Result<Vec<(LayoutRow, [f64; 2])>, EmbedError> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader
        .headers()
        .map_err(|e| EmbedError::Csv(e.to_string()))?;
    if header.iter().ne(HEADER) {
        return Err(EmbedError::Csv(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| EmbedError::Csv(format!("line {line}: {e}")))?;
        let bad = |what: &str| EmbedError::Csv(format!("line {line}: bad {what}"));
        let id = rec[0].parse().map_err(|_| bad("id"))?;
        let x: f64 = rec[1].parse().map_err(|_| bad("x"))?;
        let y: f64 = rec[2].parse().map_err(|_| bad("y"))?;
        let category = (!rec[3].is_empty()).then(|| rec[3].to_string());
        let rank = if rec[4].is_empty() {
            None
        } else {
            Some(
                rec[4]
                    .parse::<u8>()
                    .ok()
                    .filter(|&r| r <= 10)
                    .ok_or_else(|| bad("rank"))?,
            )
        };
        rows.push((LayoutRow { id, category, rank }, [x, y]));
    }
    Ok(rows)
}
