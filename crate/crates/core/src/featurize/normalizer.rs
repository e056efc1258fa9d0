use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizerError {
    #[error("cannot fit a normalizer on zero vectors")]
    Empty,
    #[error("vector {index} has dimension {found}, expected {expected}")]
    MixedDims {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("dimension mismatch: normalizer has {expected}, vector has {found}")]
    DimMismatch { expected: usize, found: usize },
}

/// Per-dimension z-score transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer<T> {
    mean: Vec<T>,
    std: Vec<T>,
}

impl<T: Scalar> Normalizer<T> {
    /// Population mean and standard deviation (divisor N), std floored at
    /// [`STD_FLOOR`].
    pub fn fit<R: AsRef<[T]>>(rows: &[R]) -> Result<Self, NormalizerError> {
        let first = rows.first().ok_or(NormalizerError::Empty)?;
        let dim = first.as_ref().len();
        for (index, r) in rows.iter().enumerate() {
            if r.as_ref().len() != dim {
                return Err(NormalizerError::MixedDims {
                    index,
                    expected: dim,
                    found: r.as_ref().len(),
                });
            }
        }
        let n = T::of(rows.len() as f64);
        let mut mean = vec![T::zero(); dim];
        for r in rows {
            for (m, &x) in mean.iter_mut().zip(r.as_ref()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); dim];
        for r in rows {
            for ((v, &m), &x) in var.iter_mut().zip(&mean).zip(r.as_ref()) {
                *v += (x - m) * (x - m);
            }
        }
        let floor = T::of(STD_FLOOR);
        let std = var.into_iter().map(|v| (v / n).sqrt().max(floor)).collect();
        Ok(Self { mean, std })
    }

    /// Mean 0, std 1.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![T::zero(); dim],
            std: vec![T::one(); dim],
        }
    }

    /// Std entries below the floor are raised to it.
    pub fn from_parts(mean: Vec<T>, std: Vec<T>) -> Result<Self, NormalizerError> {
        if mean.len() != std.len() {
            return Err(NormalizerError::DimMismatch {
                expected: mean.len(),
                found: std.len(),
            });
        }
        let floor = T::of(STD_FLOOR);
        let std = std.into_iter().map(|s| s.max(floor)).collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn std(&self) -> &[T] {
        &self.std
    }

    fn check(&self, x: &[T]) -> Result<(), NormalizerError> {
        if x.len() != self.dim() {
            return Err(NormalizerError::DimMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn normalize(&self, x: &[T]) -> Result<Vec<T>, NormalizerError> {
        self.check(x)?;
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((&v, &m), &s)| (v - m) / s)
            .collect())
    }

    pub fn denormalize(&self, z: &[T]) -> Result<Vec<T>, NormalizerError> {
        self.check(z)?;
        Ok(z.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((&v, &m), &s)| v * s + m)
            .collect())
    }
}
