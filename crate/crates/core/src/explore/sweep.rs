use super::{check_model_dim, in_box, ExploreError};
use crate::fmt::g12;
use crate::morphogen::{phenotype, Genotype, Image, DEFAULT_BUDGET, PARAMS};
use crate::predict::Predictor;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const MIN_RESOLUTION: usize = 2;
pub const MAX_RESOLUTION: usize = 64;
pub const MAX_SHEET_SIDE: usize = 8192;
/// Width of the gaps between contact-sheet tiles, in pixels.
pub const SEPARATOR: usize = 2;
pub const SEPARATOR_SHADE: u8 = 128;

/// R×R genotypes varying two parameters around a base; cell (r, c) sets
/// u[i] from column c and u[j] from row r.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub base: Genotype,
    pub dim_i: usize,
    pub dim_j: usize,
    pub range_i: (f64, f64),
    pub range_j: (f64, f64),
    pub resolution: usize,
    /// Row-major.
    pub cells: Vec<Genotype>,
}

impl SweepGrid {
    pub fn cell(&self, row: usize, col: usize) -> &Genotype {
        &self.cells[row * self.resolution + col]
    }

    /// Distance between neighbouring cells along (dim_i, dim_j).
    pub fn steps(&self) -> (f64, f64) {
        let r = (self.resolution - 1) as f64;
        (
            (self.range_i.1 - self.range_i.0) / r,
            (self.range_j.1 - self.range_j.0) / r,
        )
    }
}

pub fn sweep_grid(
    base: &Genotype,
    dim_i: usize,
    dim_j: usize,
    range_i: (f64, f64),
    range_j: (f64, f64),
    resolution: usize,
) -> Result<SweepGrid, ExploreError> {
    for d in [dim_i, dim_j] {
        if d >= PARAMS {
            return Err(ExploreError::DimOutOfRange(d));
        }
    }
    if dim_i == dim_j {
        return Err(ExploreError::SameDim(dim_i));
    }
    for (lo, hi) in [range_i, range_j] {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(ExploreError::BadRange(lo, hi));
        }
    }
    if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&resolution) {
        return Err(ExploreError::Resolution(resolution));
    }
    let r = (resolution - 1) as f64;
    let at = |(lo, hi): (f64, f64), k: usize| {
        if k + 1 == resolution {
            hi
        } else {
            lo + k as f64 * (hi - lo) / r
        }
    };
    let cells = (0..resolution * resolution)
        .map(|n| {
            let (row, col) = (n / resolution, n % resolution);
            let mut u = *base.u();
            u[dim_i] = at(range_i, col);
            u[dim_j] = at(range_j, row);
            in_box(u)
        })
        .collect();
    Ok(SweepGrid {
        base: base.clone(),
        dim_i,
        dim_j,
        range_i,
        range_j,
        resolution,
        cells,
    })
}

/// Grows every cell with the same seed and tiles the renders row-major,
/// separated by [`SEPARATOR`]-pixel gaps.
pub fn sweep_render(grid: &SweepGrid, seed: u64, tile: usize) -> Result<Image, ExploreError> {
    let r = grid.resolution;
    let side = r * tile + SEPARATOR * (r - 1);
    if r * tile > MAX_SHEET_SIDE {
        return Err(ExploreError::SheetTooLarge(r * tile));
    }
    let tiles: Vec<Image> = grid
        .cells
        .par_iter()
        .map(|g| phenotype(g, seed, DEFAULT_BUDGET, tile).map(|(_, img)| img))
        .collect::<Result<_, _>>()?;
    let mut sheet = Image::filled(side, side, SEPARATOR_SHADE);
    for (n, img) in tiles.iter().enumerate() {
        let (row, col) = (n / r, n % r);
        sheet.blit(img, col * (tile + SEPARATOR), row * (tile + SEPARATOR));
    }
    Ok(sheet)
}

/// Predictions over a sweep grid; each array is row-major and present only
/// when the predictor has the matching head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub grid: SweepGrid,
    pub categories: Option<Vec<usize>>,
    pub margins: Option<Vec<f64>>,
    pub ranks: Option<Vec<f64>>,
}

pub fn cross_section<P: Predictor<f64> + Sync>(
    model: &P,
    grid: &SweepGrid,
) -> Result<CrossSection, ExploreError> {
    check_model_dim(model.input_dim())?;
    let predictions = grid
        .cells
        .par_iter()
        .map(|g| model.predict(g.u()))
        .collect::<Result<Vec<_>, _>>()?;
    let classified = predictions
        .first()
        .is_some_and(|p| p.distribution.is_some());
    let ranked = predictions.first().is_some_and(|p| p.rank.is_some());
    Ok(CrossSection {
        grid: grid.clone(),
        categories: classified.then(|| {
            predictions
                .iter()
                .map(|p| p.category().unwrap_or(0))
                .collect()
        }),
        margins: classified.then(|| {
            predictions
                .iter()
                .map(|p| p.margin().unwrap_or(0.0))
                .collect()
        }),
        ranks: ranked.then(|| predictions.iter().map(|p| p.rank.unwrap_or(0.0)).collect()),
    })
}

/// Writes `row,col,u_i,u_j,category,margin,rank`; absent heads leave their
/// columns empty, and categories are written by name when names are given.
pub fn cross_section_csv<W: Write>(
    cs: &CrossSection,
    labels: Option<&[String]>,
    w: W,
) -> Result<(), ExploreError> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| ExploreError::Csv(e.to_string());
    out.write_record(["row", "col", "u_i", "u_j", "category", "margin", "rank"])
        .map_err(err)?;
    let r = cs.grid.resolution;
    for (n, g) in cs.grid.cells.iter().enumerate() {
        let category = cs.categories.as_ref().map_or(String::new(), |c| {
            match labels.and_then(|l| l.get(c[n])) {
                Some(name) => name.clone(),
                None => c[n].to_string(),
            }
        });
        out.write_record([
            (n / r).to_string(),
            (n % r).to_string(),
            g12(g.u()[cs.grid.dim_i]),
            g12(g.u()[cs.grid.dim_j]),
            category,
            cs.margins.as_ref().map_or(String::new(), |m| g12(m[n])),
            cs.ranks.as_ref().map_or(String::new(), |v| g12(v[n])),
        ])
        .map_err(err)?;
    }
    out.flush()?;
    Ok(())
}

/// Neighbouring cells `a < b` (row-major order) with differing predicted
/// categories, and the genotype halfway between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub categories: (usize, usize),
    pub midpoint: Genotype,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransitionSet {
    pub transitions: Vec<Transition>,
}

impl TransitionSet {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

/// Every 4-connected pair with differing categories, listed once, ordered by
/// the first cell and then right neighbour before lower neighbour.
pub fn find_transitions(cs: &CrossSection) -> TransitionSet {
    let Some(categories) = &cs.categories else {
        return TransitionSet::default();
    };
    let r = cs.grid.resolution;
    let mut transitions = Vec::new();
    for row in 0..r {
        for col in 0..r {
            let a = row * r + col;
            let right = (col + 1 < r).then_some(a + 1);
            let down = (row + 1 < r).then_some(a + r);
            for b in [right, down].into_iter().flatten() {
                if categories[a] != categories[b] {
                    let (ga, gb) = (cs.grid.cells[a].u(), cs.grid.cells[b].u());
                    let midpoint = in_box(std::array::from_fn(|k| (ga[k] + gb[k]) / 2.0));
                    transitions.push(Transition {
                        a: (row, col),
                        b: (b / r, b % r),
                        categories: (categories[a], categories[b]),
                        midpoint,
                    });
                }
            }
        }
    }
    TransitionSet { transitions }
}
