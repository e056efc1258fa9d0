//! Embeddings, sweeps and cross-sections over stored records and models.

use formscape_core::embed::{pca2, tsne_with, EmbedMethod, LayoutRow, SourceSpace, TsneParams};
use formscape_core::explore::{cross_section, sweep_grid, CrossSection, SweepGrid};
use formscape_core::morphogen::Genotype;
use formscape_core::Layout;
use serde::{Deserialize, Serialize};

use crate::record::genotype_from_unit;
use crate::store::{Result, Store, StoreError};

fn default_perplexity() -> f64 {
    30.0
}

fn default_iterations() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRequest {
    pub space: SourceSpace,
    pub method: EmbedMethod,
    #[serde(default = "default_perplexity")]
    pub perplexity: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub layout: Layout,
    /// Labels of each laid-out record, in layout order.
    pub rows: Vec<LayoutRow>,
}

fn unit_ranges() -> [[f64; 2]; 2] {
    [[0.0, 1.0]; 2]
}

/// A genotype given either directly or by record id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BaseGenotype {
    #[serde(default)]
    pub base_record_id: Option<u64>,
    #[serde(default)]
    pub base_genotype: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRequest {
    #[serde(flatten)]
    pub base: BaseGenotype,
    pub dim_i: usize,
    pub dim_j: usize,
    /// `[lo, hi]` along `dim_i`, then along `dim_j`.
    #[serde(default = "unit_ranges")]
    pub ranges: [[f64; 2]; 2],
    pub resolution: usize,
}

impl Store {
    pub fn resolve_base(&self, base: &BaseGenotype) -> Result<Genotype> {
        match (base.base_record_id, &base.base_genotype) {
            (Some(id), None) => Ok(self.record(id)?.genotype.clone()),
            (None, Some(u)) => genotype_from_unit(u).map_err(StoreError::Invalid),
            _ => Err(StoreError::Invalid(
                "give exactly one of base_record_id and base_genotype".into(),
            )),
        }
    }

    pub fn grid(&self, req: &GridRequest) -> Result<SweepGrid> {
        let base = self.resolve_base(&req.base)?;
        let [[a, b], [c, d]] = req.ranges;
        Ok(sweep_grid(
            &base,
            req.dim_i,
            req.dim_j,
            (a, b),
            (c, d),
            req.resolution,
        )?)
    }

    /// Predicted categories, margins and ranks of a genotype-space model over
    /// a grid, with the model's label names.
    pub fn cross_section(
        &self,
        model_id: u64,
        req: &GridRequest,
    ) -> Result<(CrossSection, Vec<String>)> {
        let (info, model) = self.model(model_id)?;
        if info.space != SourceSpace::Genotype {
            return Err(StoreError::Invalid(format!(
                "model {model_id} is not a genotype-space model"
            )));
        }
        let labels = info.label_names.clone();
        let grid = self.grid(req)?;
        Ok((cross_section(model.as_ref(), &grid)?, labels))
    }

    /// Lays out every record with an input in the requested space.
    pub fn embedding(&self, req: &EmbeddingRequest) -> Result<Embedding> {
        let mut ids = Vec::new();
        let mut inputs = Vec::new();
        for r in self.records() {
            if let Some(x) = self.input_of(r.id, req.space)? {
                ids.push(r.id);
                inputs.push(x);
            }
        }
        let layout = match req.method {
            EmbedMethod::Pca => pca2(&inputs, req.space)?,
            EmbedMethod::Tsne => {
                let params = TsneParams::new(req.perplexity, req.iterations, req.seed);
                tsne_with(&inputs, &params, req.space)?.layout
            }
        };
        let layout = layout.with_ids(ids.clone())?;
        let rows = ids
            .iter()
            .map(|&id| {
                let r = &self.records[&id];
                LayoutRow {
                    id,
                    category: r.category.clone(),
                    rank: r.rank,
                }
            })
            .collect();
        Ok(Embedding { layout, rows })
    }
}
