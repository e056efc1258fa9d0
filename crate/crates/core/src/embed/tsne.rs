use super::{check_rows, EmbedError, EmbedMethod, EmbeddingLayout, SourceSpace};
use crate::rng::SplitMix64;
use crate::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Exact t-SNE holds N² affinities, so inputs are capped.
pub const MAX_POINTS: usize = 5000;
/// Squared distances below this are raised to it, so duplicate points keep
/// a finite kernel.
pub const DISTANCE_FLOOR: f64 = 1e-12;
const SEARCH_STEPS: usize = 50;
const SEARCH_TOLERANCE: f64 = 1e-5;
const INIT_STD: f64 = 1e-4;

/// Optimizer settings, stored with every t-SNE layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub seed: u64,
    pub exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            seed: 0,
            exaggeration: 12.0,
            exaggeration_iterations: 250,
            learning_rate: 200.0,
            momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
        }
    }
}

impl TsneParams {
    pub fn new(perplexity: f64, iterations: usize, seed: u64) -> Self {
        Self {
            perplexity,
            iterations,
            seed,
            ..Self::default()
        }
    }
}

/// A layout together with KL(P‖Q) measured before each update.
#[derive(Debug, Clone, PartialEq)]
pub struct TsneRun<T> {
    pub layout: EmbeddingLayout<T>,
    pub kl: Vec<f64>,
}

pub fn tsne<T: Scalar, R: AsRef<[T]> + Sync>(
    x: &[R],
    perplexity: f64,
    iterations: usize,
    seed: u64,
    space: SourceSpace,
) -> Result<EmbeddingLayout<T>, EmbedError> {
    Ok(tsne_with(x, &TsneParams::new(perplexity, iterations, seed), space)?.layout)
}

/// Exact t-SNE: perplexity-calibrated Gaussian affinities in input space,
/// Student-t affinities in the plane, momentum gradient descent on the KL
/// divergence with early exaggeration.
pub fn tsne_with<T: Scalar, R: AsRef<[T]> + Sync>(
    x: &[R],
    params: &TsneParams,
    space: SourceSpace,
) -> Result<TsneRun<T>, EmbedError> {
    check_rows(x, 2)?;
    let n = x.len();
    if n > MAX_POINTS {
        return Err(EmbedError::TooManyPoints(n));
    }
    let limit = n as f64 / 3.0;
    if !(params.perplexity > 1.0 && params.perplexity < limit) {
        return Err(EmbedError::Perplexity {
            perplexity: params.perplexity,
            limit,
        });
    }
    let p = joint_flat(&conditional_flat(x, params.perplexity), n);

    let mut rng = SplitMix64::new(params.seed);
    let mut y: Vec<[T; 2]> = (0..n)
        .map(|_| {
            [
                T::of(INIT_STD * rng.gaussian()),
                T::of(INIT_STD * rng.gaussian()),
            ]
        })
        .collect();
    let mut velocity = vec![[T::zero(); 2]; n];
    let mut num = vec![T::zero(); n * n];
    let mut kl = Vec::with_capacity(params.iterations);
    let four = T::of(4.0);
    let lr = T::of(params.learning_rate);

    for it in 0..params.iterations {
        let exaggeration = T::of(if it < params.exaggeration_iterations {
            params.exaggeration
        } else {
            1.0
        });
        let momentum = T::of(if it < params.momentum_switch {
            params.momentum
        } else {
            params.final_momentum
        });

        let row_sums: Vec<T> = num
            .par_chunks_mut(n)
            .enumerate()
            .map(|(i, row)| {
                let mut s = T::zero();
                for (j, q) in row.iter_mut().enumerate() {
                    *q = if i == j {
                        T::zero()
                    } else {
                        let (dx, dy) = (y[i][0] - y[j][0], y[i][1] - y[j][1]);
                        T::one() / (T::one() + dx * dx + dy * dy)
                    };
                    s += *q;
                }
                s
            })
            .collect();
        let z: T = row_sums.iter().copied().sum();

        let (grads, kls): (Vec<[T; 2]>, Vec<f64>) = (0..n)
            .into_par_iter()
            .map(|i| {
                let (prow, qrow) = (&p[i * n..(i + 1) * n], &num[i * n..(i + 1) * n]);
                let mut g = [T::zero(); 2];
                let mut k = 0.0;
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let q = qrow[j] / z;
                    let w = (exaggeration * prow[j] - q) * qrow[j];
                    g[0] += w * (y[i][0] - y[j][0]);
                    g[1] += w * (y[i][1] - y[j][1]);
                    if prow[j] > T::zero() {
                        k += prow[j].as_f64()
                            * (prow[j].as_f64() / q.as_f64().max(f64::MIN_POSITIVE)).ln();
                    }
                }
                ([four * g[0], four * g[1]], k)
            })
            .unzip();
        kl.push(kls.iter().sum());

        for ((yi, vi), g) in y.iter_mut().zip(&mut velocity).zip(&grads) {
            for a in 0..2 {
                vi[a] = momentum * vi[a] - lr * g[a];
                yi[a] += vi[a];
            }
        }
        let count = T::of(n as f64);
        let cx = y.iter().map(|c| c[0]).sum::<T>() / count;
        let cy = y.iter().map(|c| c[1]).sum::<T>() / count;
        for c in &mut y {
            c[0] -= cx;
            c[1] -= cy;
        }
    }
    let layout = EmbeddingLayout::new(y, EmbedMethod::Tsne, Some(params.clone()), space);
    Ok(TsneRun { layout, kl })
}

/// Conditional affinities p(j|i): each row is a Gaussian kernel over squared
/// distances whose precision is bisected until the row's perplexity matches
/// the target. Only `perplexity > 1` and `N ≥ 2` are required here.
pub fn calibrate_affinities<T: Scalar, R: AsRef<[T]> + Sync>(
    x: &[R],
    perplexity: f64,
) -> Result<Vec<Vec<T>>, EmbedError> {
    check_rows(x, 2)?;
    if !(perplexity > 1.0 && perplexity.is_finite()) {
        return Err(EmbedError::Perplexity {
            perplexity,
            limit: f64::INFINITY,
        });
    }
    let n = x.len();
    Ok(conditional_flat(x, perplexity)
        .chunks(n)
        .map(<[T]>::to_vec)
        .collect())
}

/// Symmetrized joint affinities (p(j|i) + p(i|j)) / 2N.
pub fn joint_affinities<T: Scalar>(conditional: &[Vec<T>]) -> Vec<Vec<T>> {
    let n = conditional.len();
    let flat: Vec<T> = conditional.concat();
    joint_flat(&flat, n).chunks(n).map(<[T]>::to_vec).collect()
}

/// 2^H with H the Shannon entropy in bits of each conditional row.
pub fn conditional_perplexities<T: Scalar>(conditional: &[Vec<T>]) -> Vec<f64> {
    conditional
        .iter()
        .map(|row| {
            let h: f64 = row
                .iter()
                .map(|p| p.as_f64())
                .filter(|&p| p > 0.0)
                .map(|p| -p * p.log2())
                .sum();
            h.exp2()
        })
        .collect()
}

fn conditional_flat<T: Scalar, R: AsRef<[T]> + Sync>(x: &[R], perplexity: f64) -> Vec<T> {
    let n = x.len();
    let target = T::of(perplexity.ln());
    let floor = T::of(DISTANCE_FLOOR);
    let mut p = vec![T::zero(); n * n];
    p.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let xi = x[i].as_ref();
        let d2: Vec<T> = x
            .iter()
            .map(|xj| {
                xi.iter()
                    .zip(xj.as_ref())
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum::<T>()
                    .max(floor)
            })
            .collect();
        let others = || (0..n).filter(move |&j| j != i);
        let dmin = others().map(|j| d2[j]).fold(T::infinity(), T::min);
        let mean = others().map(|j| d2[j] - dmin).sum::<T>() / T::of((n - 1) as f64);
        let mut beta = if mean > T::zero() {
            T::one() / mean
        } else {
            T::one()
        };
        let (mut lo, mut hi) = (T::zero(), T::infinity());
        for _ in 0..SEARCH_STEPS {
            let mut sum = T::zero();
            let mut weighted = T::zero();
            for j in others() {
                let shifted = d2[j] - dmin;
                let w = (-beta * shifted).exp();
                row[j] = w;
                sum += w;
                weighted += w * shifted;
            }
            let entropy = sum.ln() + beta * weighted / sum;
            row.iter_mut().for_each(|v| *v /= sum);
            let diff = entropy - target;
            if diff.abs().as_f64() < SEARCH_TOLERANCE {
                break;
            }
            if diff > T::zero() {
                lo = beta;
                beta = if hi.is_infinite() {
                    beta * T::of(2.0)
                } else {
                    (beta + hi) / T::of(2.0)
                };
            } else {
                hi = beta;
                beta = (beta + lo) / T::of(2.0);
            }
        }
    });
    p
}

fn joint_flat<T: Scalar>(conditional: &[T], n: usize) -> Vec<T> {
    let scale = T::of(2.0 * n as f64);
    let mut p = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (conditional[i * n + j] + conditional[j * n + i]) / scale;
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equidistant_triple_is_uniform() {
        let x = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        for perplexity in [1.5, 2.0] {
            let p: Vec<Vec<f64>> = calibrate_affinities(&x, perplexity).unwrap();
            for (i, row) in p.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    let expected = if i == j { 0.0 } else { 0.5 };
                    assert!((v - expected).abs() < 1e-12, "{p:?}");
                }
            }
        }
    }

    #[test]
    fn duplicates_stay_finite() {
        let x = vec![vec![1.0, 1.0]; 10];
        let p = calibrate_affinities(&x, 3.0).unwrap();
        assert!(p.iter().flatten().all(|v: &f64| v.is_finite()));
        let run = tsne_with(&x, &TsneParams::new(3.0, 50, 1), SourceSpace::Genotype).unwrap();
        assert!(run.layout.coords.iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn rejects_bad_perplexity_and_size() {
        let x = vec![vec![0.0, 1.0]; 9];
        assert!(matches!(
            tsne(&x, 3.0, 10, 0, SourceSpace::Genotype),
            Err(EmbedError::Perplexity { .. })
        ));
        assert!(matches!(
            tsne(&x, 1.0, 10, 0, SourceSpace::Genotype),
            Err(EmbedError::Perplexity { .. })
        ));
        let big = vec![vec![0.0f32, 1.0]; MAX_POINTS + 1];
        assert!(matches!(
            tsne(&big, 30.0, 1, 0, SourceSpace::Feature),
            Err(EmbedError::TooManyPoints(_))
        ));
    }

    #[test]
    fn params_are_recorded() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let l = tsne(&x, 2.5, 20, 4, SourceSpace::Feature).unwrap();
        let p = l.params.unwrap();
        assert_eq!((p.perplexity, p.iterations, p.seed), (2.5, 20, 4));
        assert_eq!(l.method, EmbedMethod::Tsne);
    }
}
