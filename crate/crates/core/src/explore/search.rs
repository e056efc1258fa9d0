use super::{check_model_dim, in_box, ExploreError};
use crate::embed::EmbeddingLayout;
use crate::morphogen::{Genotype, PARAMS};
use crate::predict::{GradientPredictor, Objective, PredictError, Predictor};
use crate::rng::SplitMix64;
use crate::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Margin below which a point counts as on a category boundary.
pub const BOUNDARY_MARGIN: f64 = 0.02;
pub const DEFAULT_DESCENT_STEP: f64 = 0.01;
pub const DEFAULT_DESCENT_STEPS: usize = 500;
/// Monte Carlo sampling gives up after this many draws per requested
/// candidate.
pub const DRAWS_PER_CANDIDATE: usize = 1000;
const DRAW_CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descent {
    pub genotype: Genotype,
    pub margin: f64,
    pub steps: usize,
    /// Margin fell below [`BOUNDARY_MARGIN`].
    pub converged: bool,
}

/// Walks down the confidence margin in fixed-length steps along the
/// normalized negative gradient, projected onto the unit box, until the
/// margin drops below [`BOUNDARY_MARGIN`] or `max_steps` are taken. A zero
/// gradient ends the walk early.
pub fn boundary_descent<P: GradientPredictor<f64>>(
    model: &P,
    start: &Genotype,
    max_steps: usize,
    step: f64,
) -> Result<Descent, ExploreError> {
    check_model_dim(model.input_dim())?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(ExploreError::Parameter(format!("step size {step}")));
    }
    let margin_at = |u: &[f64]| -> Result<f64, ExploreError> {
        model.predict(u)?.margin().ok_or_else(|| {
            PredictError::HeadMismatch("boundary descent needs a classifier head".into()).into()
        })
    };
    let mut u = *start.u();
    let mut margin = margin_at(&u)?;
    let mut steps = 0;
    while margin >= BOUNDARY_MARGIN && steps < max_steps {
        let g = model.input_gradient(&u, Objective::Margin)?;
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        for (x, gk) in u.iter_mut().zip(&g) {
            *x = (*x - step * gk / norm).clamp(0.0, 1.0);
        }
        margin = margin_at(&u)?;
        steps += 1;
    }
    Ok(Descent {
        genotype: in_box(u),
        margin,
        steps,
        converged: margin < BOUNDARY_MARGIN,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleCriteria {
    pub min_rank: Option<f64>,
    pub category: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub genotype: Genotype,
    pub rank: Option<f64>,
    pub category: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Samples {
    /// By predicted rank, highest first; draw order among equal ranks.
    pub candidates: Vec<Candidate>,
    pub draws: usize,
    /// Set when the draw budget ran out before `n` candidates were found.
    pub warning: Option<String>,
}

/// Draws uniform genotypes until `n` meet the criteria or
/// `n·`[`DRAWS_PER_CANDIDATE`] draws are spent.
pub fn monte_carlo_sample<P: Predictor<f64> + Sync>(
    model: &P,
    criteria: SampleCriteria,
    n: usize,
    seed: u64,
) -> Result<Samples, ExploreError> {
    check_model_dim(model.input_dim())?;
    if n == 0 {
        return Err(ExploreError::Count("n"));
    }
    let budget = n.saturating_mul(DRAWS_PER_CANDIDATE);
    let mut rng = SplitMix64::new(seed);
    let mut candidates = Vec::with_capacity(n);
    let mut draws = 0;
    while candidates.len() < n && draws < budget {
        let chunk: Vec<[f64; PARAMS]> = (0..DRAW_CHUNK.min(budget - draws))
            .map(|_| std::array::from_fn(|_| rng.next_f64()))
            .collect();
        let predictions = chunk
            .par_iter()
            .map(|u| model.predict(u))
            .collect::<Result<Vec<_>, _>>()?;
        for (u, p) in chunk.iter().zip(predictions) {
            draws += 1;
            let rank_ok = match criteria.min_rank {
                Some(min) => {
                    p.rank.ok_or_else(|| {
                        PredictError::HeadMismatch("rank criterion needs a regressor head".into())
                    })? >= min
                }
                None => true,
            };
            let category_ok = match criteria.category {
                Some(c) => {
                    p.category().ok_or_else(|| {
                        PredictError::HeadMismatch(
                            "category criterion needs a classifier head".into(),
                        )
                    })? == c
                }
                None => true,
            };
            if rank_ok && category_ok {
                candidates.push(Candidate {
                    genotype: in_box(*u),
                    rank: p.rank,
                    category: p.category(),
                });
                if candidates.len() == n {
                    break;
                }
            }
        }
    }
    candidates.sort_by(|a, b| b.rank.unwrap_or(0.0).total_cmp(&a.rank.unwrap_or(0.0)));
    let warning = (candidates.len() < n).then(|| {
        format!(
            "draw budget of {budget} exhausted with {} of {n} candidates",
            candidates.len()
        )
    });
    Ok(Samples {
        candidates,
        draws,
        warning,
    })
}

/// Stochastic hill climbing on predicted rank: Gaussian proposals clamped
/// to the unit box, accepted only on strict improvement. Returns the start
/// and every accepted point with its rank.
pub fn hill_climb<P: Predictor<f64>>(
    model: &P,
    start: &Genotype,
    iterations: usize,
    sigma: f64,
    seed: u64,
) -> Result<Vec<(Genotype, f64)>, ExploreError> {
    check_model_dim(model.input_dim())?;
    if iterations == 0 {
        return Err(ExploreError::Count("iterations"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(ExploreError::Parameter(format!("sigma {sigma}")));
    }
    let rank_at = |u: &[f64]| -> Result<f64, ExploreError> {
        model.predict(u)?.rank.ok_or_else(|| {
            PredictError::HeadMismatch("hill climbing needs a regressor head".into()).into()
        })
    };
    let mut rng = SplitMix64::new(seed);
    let mut u = *start.u();
    let mut best = rank_at(&u)?;
    let mut trajectory = vec![(start.clone(), best)];
    for _ in 0..iterations {
        let proposal: [f64; PARAMS] =
            std::array::from_fn(|k| (u[k] + sigma * rng.gaussian()).clamp(0.0, 1.0));
        let rank = rank_at(&proposal)?;
        if rank > best {
            u = proposal;
            best = rank;
            trajectory.push((in_box(u), rank));
        }
    }
    Ok(trajectory)
}

/// Ids of layout points within `radius` of `point`, nearest first; equal
/// distances keep layout order.
pub fn neighbors_in_layout<T: Scalar>(
    layout: &EmbeddingLayout<T>,
    point: [f64; 2],
    radius: f64,
) -> Result<Vec<u64>, ExploreError> {
    if layout.is_empty() {
        return Err(ExploreError::EmptyLayout);
    }
    let mut hits: Vec<(f64, usize)> = layout
        .coords
        .iter()
        .enumerate()
        .map(|(i, c)| {
            (
                (c[0].as_f64() - point[0]).hypot(c[1].as_f64() - point[1]),
                i,
            )
        })
        .filter(|&(d, _)| d <= radius)
        .collect();
    hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(hits.into_iter().map(|(_, i)| layout.ids[i]).collect())
}
