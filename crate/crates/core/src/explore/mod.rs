//! Navigation of genotype space: parameter sweeps, predicted cross-sections
//! and their category transitions, descent to category boundaries, and
//! predictor-guided sampling and hill climbing.

mod search;
mod sweep;

pub use search::{
    boundary_descent, hill_climb, monte_carlo_sample, neighbors_in_layout, Candidate, Descent,
    SampleCriteria, Samples, BOUNDARY_MARGIN, DEFAULT_DESCENT_STEP, DEFAULT_DESCENT_STEPS,
    DRAWS_PER_CANDIDATE,
};
pub use sweep::{
    cross_section, cross_section_csv, find_transitions, sweep_grid, sweep_render, CrossSection,
    SweepGrid, Transition, TransitionSet, MAX_RESOLUTION, MAX_SHEET_SIDE, MIN_RESOLUTION,
    SEPARATOR, SEPARATOR_SHADE,
};

use crate::morphogen::{Genotype, ResolutionError, PARAMS};
use crate::predict::PredictError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("sweep dimensions must differ, both are {0}")]
    SameDim(usize),
    #[error("parameter index {0} out of range")]
    DimOutOfRange(usize),
    #[error("range ({0}, {1}) must satisfy 0 <= lo < hi <= 1")]
    BadRange(f64, f64),
    #[error("resolution {0} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}]")]
    Resolution(usize),
    #[error("contact sheet side {0} exceeds {MAX_SHEET_SIDE}")]
    SheetTooLarge(usize),
    #[error("layout is empty")]
    EmptyLayout,
    #[error("{0} must be at least 1")]
    Count(&'static str),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Tile(#[from] ResolutionError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Genotype for coordinates already inside the unit box.
pub(crate) fn in_box(u: [f64; PARAMS]) -> Genotype {
    debug_assert!(
        u.iter().all(|x| (0.0..=1.0).contains(x)),
        "{u:?} leaves the unit box"
    );
    Genotype::from_unit(u).expect("finite coordinates")
}

pub(crate) fn check_model_dim(dim: usize) -> Result<(), ExploreError> {
    if dim == PARAMS {
        Ok(())
    } else {
        Err(PredictError::DimMismatch {
            expected: dim,
            found: PARAMS,
        }
        .into())
    }
}
