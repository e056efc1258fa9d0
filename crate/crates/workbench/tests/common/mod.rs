#![allow(dead_code)]

use std::path::Path;

use chrono::{DateTime, Utc};
use formscape_core::morphogen::Genotype;
use formscape_core::synthetic::{planted_rank, three_class_rule, uniform_points};
use formscape_workbench::record::{write_records, PhenotypeRecord, Provenance};
use formscape_workbench::Store;

pub const LABELS: [&str; 3] = ["alpha", "beta", "gamma"];

pub fn fixed_time() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2026-01-02T03:04:05Z")
        .unwrap()
        .with_timezone(&Utc)
}

/// Human-judged records labeled by the planted 3-class rule and a rank
/// rounded from the planted rank function. They reference images that do
/// not exist; genotype-space work does not need them.
pub fn planted_records(n: usize, seed: u64) -> Vec<PhenotypeRecord> {
    uniform_points(n, 12, seed)
        .into_iter()
        .enumerate()
        .map(|(i, u)| {
            let id = i as u64 + 1;
            PhenotypeRecord {
                id,
                genotype: Genotype::from_unit(std::array::from_fn(|k| u[k])).unwrap(),
                seed: id,
                image_path: format!("images/{id:08}.pgm"),
                features_path: None,
                rank: Some(planted_rank(&u).round().clamp(1.0, 10.0) as u8),
                category: Some(LABELS[three_class_rule(&u)].to_string()),
                provenance: Provenance::Human,
                viable: true,
                rank_forced: false,
                created: fixed_time(),
                modified: fixed_time(),
            }
        })
        .collect()
}

pub fn write_csv(path: &Path, records: &[PhenotypeRecord]) {
    let mut f = std::fs::File::create(path).unwrap();
    write_records(records, &mut f).unwrap();
}

/// Store at `dir/store` holding `records`.
pub fn store_with(dir: &Path, records: &[PhenotypeRecord]) -> Store {
    let csv = dir.join("seed.csv");
    write_csv(&csv, records);
    let mut store = Store::open(dir.join("store")).unwrap();
    store.import_dataset(&csv).unwrap();
    store
}

/// Zero base food income and zero curvature bias: no cell ever gains food.
pub fn starving_genotype() -> Genotype {
    let mut u = [0.5; 12];
    u[6] = 0.0;
    Genotype::from_unit(u).unwrap()
}
