//! Frozen reference outputs. Regenerating any of these is a breaking change
//! to the growth model, renderer or feature extractor.

use formscape_core::featurize::extract_features;
use formscape_core::morphogen::{grow, phenotype, render, Genotype, GrowthResult, Image};

const REFERENCE_U: [f64; 12] = [0.5, 0.5, 0.5, 0.5, 0.3, 0.6, 0.08, 0.5, 0.5, 0.4, 0.2, 0.5];
const REFERENCE_SEED: u64 = 7;
const REFERENCE_CELLS: usize = 1024;
const REFERENCE_HASH: u64 = 0x8e15_2ba7_a69d_1f7e;

fn reference() -> Genotype {
    Genotype::from_unit(REFERENCE_U).unwrap()
}

#[test]
fn reference_growth_matches_fixture() {
    let r = grow(&reference(), REFERENCE_SEED, 4096);
    assert_eq!(r.cell_count(), REFERENCE_CELLS);
    let golden = include_str!("fixtures/reference_growth.txt");
    assert_eq!(r.to_text(), golden);
    assert_eq!(GrowthResult::from_text(golden).unwrap(), r);
}

#[test]
fn reference_render_hash() {
    let (_, img) = phenotype(&reference(), REFERENCE_SEED, 4096, 256).unwrap();
    assert_eq!(img.content_hash(), REFERENCE_HASH);
    let from_fixture = render(
        &GrowthResult::from_text(include_str!("fixtures/reference_growth.txt")).unwrap(),
        256,
    )
    .unwrap();
    assert_eq!(from_fixture.content_hash(), REFERENCE_HASH);
}

fn checkerboard() -> Image {
    let mut img = Image::new(128, 128);
    for y in 0..128 {
        for x in 0..128 {
            if ((x / 8) + (y / 8)) % 2 == 0 {
                img.set(x, y, 255);
            }
        }
    }
    img
}

#[test]
fn checkerboard_features_match_reference_implementation() {
    let golden: Vec<f64> = include_str!("fixtures/checkerboard_features.txt")
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    let f = extract_features(&checkerboard());
    assert_eq!(golden.len(), f.dim());
    for (i, (a, b)) in f.values().iter().zip(&golden).enumerate() {
        assert!((a - b).abs() <= 1e-12, "feature {i}: {a} vs {b}");
    }
}
