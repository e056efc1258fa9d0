use super::dataset::LabeledDataset;
use super::{CategoryDistribution, PredictError, Prediction, Predictor};
use crate::featurize::Normalizer;
use crate::Scalar;

pub const DEFAULT_K: usize = 5;

/// k-nearest-neighbour baseline over z-scored inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel<T> {
    k: usize,
    classes: usize,
    normalizer: Normalizer<T>,
    inputs: Vec<Vec<T>>,
    categories: Vec<Option<usize>>,
    ranks: Vec<Option<T>>,
}

/// Stores the training side, normalized with statistics of that side.
pub fn knn_fit<T: Scalar>(ds: &LabeledDataset<T>, k: usize) -> Result<KnnModel<T>, PredictError> {
    if k == 0 {
        return Err(PredictError::Config("k must be at least 1".into()));
    }
    let rows: Vec<_> = ds.train().collect();
    if rows.is_empty() {
        return Err(PredictError::EmptySplit(super::Split::Train));
    }
    if rows.len() < k {
        return Err(PredictError::Config(format!(
            "k = {k} exceeds {} training rows",
            rows.len()
        )));
    }
    let raw: Vec<&[T]> = rows.iter().map(|r| r.input.as_slice()).collect();
    let normalizer = Normalizer::fit(&raw)?;
    let inputs = raw
        .iter()
        .map(|x| normalizer.normalize(x))
        .collect::<Result<_, _>>()?;
    Ok(KnnModel {
        k,
        classes: ds.classes(),
        normalizer,
        inputs,
        categories: rows.iter().map(|r| r.category).collect(),
        ranks: rows.iter().map(|r| r.rank).collect(),
    })
}

impl<T: Scalar> KnnModel<T> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Training row indices of the k nearest neighbours; equal distances
    /// keep the lower row first.
    pub fn neighbors(&self, x: &[T]) -> Result<Vec<usize>, PredictError> {
        if x.len() != self.normalizer.dim() {
            return Err(PredictError::DimMismatch {
                expected: self.normalizer.dim(),
                found: x.len(),
            });
        }
        let q = self.normalizer.normalize(x)?;
        let mut dist: Vec<(T, usize)> = self
            .inputs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                (
                    r.iter()
                        .zip(&q)
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .sum::<T>(),
                    i,
                )
            })
            .collect();
        dist.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite distances")
                .then(a.1.cmp(&b.1))
        });
        Ok(dist.into_iter().take(self.k).map(|(_, i)| i).collect())
    }

    /// Vote fractions among labelled neighbours and the mean neighbour rank.
    pub fn knn_predict(&self, x: &[T]) -> Result<Prediction<T>, PredictError> {
        let nb = self.neighbors(x)?;
        let distribution = if self.classes > 0 {
            let mut votes = vec![0usize; self.classes];
            for &i in &nb {
                if let Some(c) = self.categories[i] {
                    votes[c] += 1;
                }
            }
            let total: usize = votes.iter().sum();
            (total > 0).then(|| {
                CategoryDistribution::new(
                    votes
                        .iter()
                        .map(|&v| T::of(v as f64) / T::of(total as f64))
                        .collect(),
                )
                .expect("vote fractions form a distribution")
            })
        } else {
            None
        };
        let ranked: Vec<T> = nb.iter().filter_map(|&i| self.ranks[i]).collect();
        let rank = (!ranked.is_empty())
            .then(|| ranked.iter().copied().sum::<T>() / T::of(ranked.len() as f64));
        Ok(Prediction { distribution, rank })
    }
}

impl<T: Scalar> Predictor<T> for KnnModel<T> {
    fn input_dim(&self) -> usize {
        self.normalizer.dim()
    }

    fn predict(&self, x: &[T]) -> Result<Prediction<T>, PredictError> {
        self.knn_predict(x)
    }
}
