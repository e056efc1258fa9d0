//! Genotype to phenotype: a seeded 2D differential-growth simulation and its
//! grayscale rendering.

mod genotype;
mod growth;
mod image;
mod render;

pub use genotype::{
    validate_genotype, ClampWarning, Genotype, GenotypeError, ParamRange, PARAMS, RANGES,
};
pub use growth::{grow, Cell, GrowthResult, Simulation, Step, DEFAULT_BUDGET, INITIAL_CELLS};
pub use image::Image;
pub use render::{
    classify_empty, render, tone_map, world_to_pixel, ResolutionError, DEFAULT_RESOLUTION,
    RESOLUTIONS,
};

/// Grows and renders in one call.
pub fn phenotype(
    genotype: &Genotype,
    seed: u64,
    budget: usize,
    resolution: usize,
) -> Result<(GrowthResult, Image), ResolutionError> {
    let growth = grow(genotype, seed, budget);
    let image = render(&growth, resolution)?;
    Ok((growth, image))
}
