//! Batch generation: choose genotypes and growth seeds, then ingest them.

use formscape_core::embed::SourceSpace;
use formscape_core::explore::{monte_carlo_sample, SampleCriteria};
use formscape_core::morphogen::{Genotype, PARAMS};
use formscape_core::rng::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::record::genotype_from_unit;
use crate::store::{ingest_all, Result, Store, StoreError};

pub const MAX_BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampler {
    /// Uniform over the unit box.
    Uniform,
    /// Draws accepted by a stored genotype-space model.
    MonteCarlo {
        model_id: u64,
        #[serde(default)]
        min_rank: Option<f64>,
        #[serde(default)]
        category: Option<String>,
    },
    /// Gaussian perturbations of a stored record, clamped to the box.
    Around { id: u64, sigma: f64 },
    /// The listed genotypes, one record each.
    Exact { genotypes: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub n: usize,
    pub sampler: Sampler,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratePlan {
    pub items: Vec<(Genotype, u64)>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GenerateReport {
    pub ids: Vec<u64>,
    pub warning: Option<String>,
}

impl Store {
    /// Genotypes and growth seeds for a batch. Growth seeds are drawn from
    /// the request seed after the genotypes.
    pub fn plan_generation(&self, req: &GenerateRequest) -> Result<GeneratePlan> {
        if !(1..=MAX_BATCH).contains(&req.n) {
            return Err(StoreError::Invalid(format!(
                "n = {} outside [1, {MAX_BATCH}]",
                req.n
            )));
        }
        let mut rng = SplitMix64::new(req.seed);
        let mut warning = None;
        let genotypes: Vec<Genotype> = match &req.sampler {
            Sampler::Uniform => (0..req.n)
                .map(|_| {
                    Genotype::from_unit(std::array::from_fn(|_| rng.next_f64())).expect("finite")
                })
                .collect(),
            Sampler::Around { id, sigma } => {
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err(StoreError::Invalid(format!(
                        "sigma {sigma} must be finite and non-negative"
                    )));
                }
                let base = *self.record(*id)?.genotype.u();
                (0..req.n)
                    .map(|_| {
                        let u: [f64; PARAMS] = std::array::from_fn(|k| {
                            (base[k] + sigma * rng.gaussian()).clamp(0.0, 1.0)
                        });
                        Genotype::from_unit(u).expect("finite")
                    })
                    .collect()
            }
            Sampler::MonteCarlo {
                model_id,
                min_rank,
                category,
            } => {
                let (info, model) = self.model(*model_id)?;
                if info.space != SourceSpace::Genotype {
                    return Err(StoreError::Invalid(format!(
                        "model {model_id} is not a genotype-space model"
                    )));
                }
                let category = category
                    .as_ref()
                    .map(|c| {
                        info.label_names.iter().position(|n| n == c).ok_or_else(|| {
                            StoreError::Invalid(format!("model {model_id} does not predict {c:?}"))
                        })
                    })
                    .transpose()?;
                let criteria = SampleCriteria {
                    min_rank: *min_rank,
                    category,
                };
                let samples = monte_carlo_sample(model.as_ref(), criteria, req.n, rng.next_u64())?;
                warning = samples.warning;
                samples.candidates.into_iter().map(|c| c.genotype).collect()
            }
            Sampler::Exact { genotypes } => {
                if genotypes.len() != req.n {
                    return Err(StoreError::Invalid(format!(
                        "n = {} but {} genotypes were given",
                        req.n,
                        genotypes.len()
                    )));
                }
                genotypes
                    .iter()
                    .map(|u| genotype_from_unit(u).map_err(StoreError::Invalid))
                    .collect::<Result<_>>()?
            }
        };
        let items = genotypes.into_iter().map(|g| (g, rng.next_u64())).collect();
        Ok(GeneratePlan { items, warning })
    }

    pub fn batch_generate(&mut self, req: &GenerateRequest) -> Result<GenerateReport> {
        let plan = self.plan_generation(req)?;
        let records = self.commit(ingest_all(&plan.items))?;
        Ok(GenerateReport {
            ids: records.iter().map(|r| r.id).collect(),
            warning: plan.warning,
        })
    }
}
