//! Planted datasets and predictors with known answers, for testing the
//! learning and exploration code against ground truth.

use crate::featurize::Normalizer;
use crate::morphogen::PARAMS;
use crate::predict::{
    CategoryDistribution, Dense, GradientPredictor, LabeledDataset, MlpModel, Objective,
    PredictError, Prediction, Predictor, Row, Split,
};
use crate::rng::SplitMix64;

/// Uniform genotypes in the unit box.
pub fn uniform_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.next_f64()).collect())
        .collect()
}

/// Three linear scores of u, each a sinusoidal weighting of all twelve
/// coordinates with the phase shifted by a third of a turn per class:
///
/// s_c = Σ_k sin(2π (c/3 + k/12)) (u_k − 0.5)
pub fn three_class_scores(u: &[f64]) -> [f64; 3] {
    let tau = std::f64::consts::TAU;
    std::array::from_fn(|c| {
        u.iter()
            .take(PARAMS)
            .enumerate()
            .map(|(k, &x)| (tau * (c as f64 / 3.0 + k as f64 / 12.0)).sin() * (x - 0.5))
            .sum()
    })
}

/// argmax of [`three_class_scores`], lower class on ties.
pub fn three_class_rule(u: &[f64]) -> usize {
    let s = three_class_scores(u);
    (1..3).fold(0, |best, c| if s[c] > s[best] { c } else { best })
}

/// Smooth rank on [0, 10]:
/// 10 (0.45 u0 + 0.35 u1 + 0.2 (1 − (2 u2 − 1)²)).
pub fn planted_rank(u: &[f64]) -> f64 {
    10.0 * (0.45 * u[0] + 0.35 * u[1] + 0.2 * (1.0 - (2.0 * u[2] - 1.0).powi(2)))
}

/// Labels from [`three_class_rule`], each flipped to the runner-up class with
/// probability 0.5·exp(−gap / width), where gap is the score lead of the
/// winning class. Labels are therefore noisiest next to class boundaries.
pub fn boundary_noise_label(u: &[f64], width: f64, rng: &mut SplitMix64) -> usize {
    let s = three_class_scores(u);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| {
        s[b].partial_cmp(&s[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    let gap = s[order[0]] - s[order[1]];
    if rng.next_f64() < 0.5 * (-gap / width).exp() {
        order[1]
    } else {
        order[0]
    }
}

/// Every fifth row (index ≡ 0 mod 5) is validation; the rest train.
pub fn fifth_split(index: usize) -> Split {
    if index.is_multiple_of(5) {
        Split::Validation
    } else {
        Split::Train
    }
}

/// `n` uniform genotypes labelled by [`three_class_rule`].
pub fn planted_category_dataset(n: usize, seed: u64) -> LabeledDataset<f64> {
    let rows = uniform_points(n, PARAMS, seed)
        .into_iter()
        .enumerate()
        .map(|(i, u)| Row {
            category: Some(three_class_rule(&u)),
            rank: None,
            input: u,
            split: fifth_split(i),
        })
        .collect();
    LabeledDataset::new(rows, class_names()).expect("planted rows are valid")
}

/// `n` uniform genotypes ranked by [`planted_rank`] plus Gaussian noise,
/// clamped to [0, 10].
pub fn planted_rank_dataset(n: usize, noise: f64, seed: u64) -> LabeledDataset<f64> {
    let mut rng = SplitMix64::new(seed ^ 0x005e_ed0f_4a4b);
    let rows = uniform_points(n, PARAMS, seed)
        .into_iter()
        .enumerate()
        .map(|(i, u)| {
            let rank = (planted_rank(&u) + noise * rng.gaussian()).clamp(0.0, 10.0);
            Row {
                rank: Some(rank),
                category: None,
                input: u,
                split: fifth_split(i),
            }
        })
        .collect();
    LabeledDataset::new(rows, vec![]).expect("planted rows are valid")
}

/// Category dataset with labels from [`boundary_noise_label`].
pub fn boundary_noise_dataset(n: usize, width: f64, seed: u64) -> LabeledDataset<f64> {
    let mut rng = SplitMix64::new(seed ^ 0x0b0d_a2e5);
    let rows = uniform_points(n, PARAMS, seed)
        .into_iter()
        .enumerate()
        .map(|(i, u)| {
            let c = boundary_noise_label(&u, width, &mut rng);
            Row {
                category: Some(c),
                rank: None,
                input: u,
                split: fifth_split(i),
            }
        })
        .collect();
    LabeledDataset::new(rows, class_names()).expect("planted rows are valid")
}

fn class_names() -> Vec<String> {
    ["alpha", "beta", "gamma"].map(String::from).to_vec()
}

/// `per_cluster` points around each of `k` centres placed on coordinate axes
/// so every pair of centres is `separation` apart; unit isotropic spread.
pub fn gaussian_clusters(
    k: usize,
    per_cluster: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    assert!(k <= dim, "one axis per cluster");
    let offset = separation / std::f64::consts::SQRT_2;
    let mut rng = SplitMix64::new(seed);
    let mut points = Vec::with_capacity(k * per_cluster);
    let mut labels = Vec::with_capacity(k * per_cluster);
    for c in 0..k {
        for _ in 0..per_cluster {
            points.push(
                (0..dim)
                    .map(|a| rng.gaussian() + if a == c { offset } else { 0.0 })
                    .collect(),
            );
            labels.push(c);
        }
    }
    (points, labels)
}

/// Exact two-class network whose logits are ±a/2 with
/// a = scale·(w·u − b): class 0 wins where w·u > b and the margin is
/// |tanh(a/2)|.
pub fn linear_logit_mlp(w: &[f64], b: f64, scale: f64) -> MlpModel<f64> {
    let d = w.len();
    let mut first = Vec::with_capacity(2 * d);
    first.extend(w.iter().map(|&v| scale * v));
    first.extend(w.iter().map(|&v| -scale * v));
    let layers = [
        Dense::from_parts(d, 2, first, vec![-scale * b, scale * b]).expect("shape"),
        Dense::from_parts(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).expect("shape"),
    ];
    let head = Dense::from_parts(2, 2, vec![0.5, -0.5, -0.5, 0.5], vec![0.0, 0.0]).expect("shape");
    MlpModel::from_layers(layers, Some(head), None, Normalizer::identity(d))
        .expect("consistent layers")
}

/// Exact network with predicted rank 10·u0 on the unit box.
pub fn monotone_rank_mlp(dim: usize) -> MlpModel<f64> {
    let mut first = vec![0.0; dim];
    first[0] = 1.0;
    let layers = [
        Dense::from_parts(dim, 1, first, vec![0.0]).expect("shape"),
        Dense::from_parts(1, 1, vec![1.0], vec![0.0]).expect("shape"),
    ];
    let head = Dense::from_parts(1, 1, vec![1.0], vec![0.0]).expect("shape");
    MlpModel::from_layers(layers, None, Some(head), Normalizer::identity(dim))
        .expect("consistent layers")
}

/// Rank `peak − curvature·|u − centre|²`, clamped to [0, 10], with a single
/// maximum at the centre.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticRank {
    pub centre: Vec<f64>,
    pub peak: f64,
    pub curvature: f64,
}

impl QuadraticRank {
    pub fn rank(&self, u: &[f64]) -> f64 {
        let r2: f64 = u
            .iter()
            .zip(&self.centre)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        (self.peak - self.curvature * r2).clamp(0.0, 10.0)
    }
}

impl Predictor<f64> for QuadraticRank {
    fn input_dim(&self) -> usize {
        self.centre.len()
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction<f64>, PredictError> {
        check_dim(self.centre.len(), x)?;
        Ok(Prediction {
            distribution: None,
            rank: Some(self.rank(x)),
        })
    }
}

/// Uniform class probabilities and a fixed rank everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPredictor {
    pub dim: usize,
    pub classes: usize,
    pub rank: f64,
}

impl Predictor<f64> for ConstantPredictor {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction<f64>, PredictError> {
        check_dim(self.dim, x)?;
        let distribution = (self.classes > 0).then(|| CategoryDistribution::uniform(self.classes));
        Ok(Prediction {
            distribution,
            rank: Some(self.rank),
        })
    }
}

impl GradientPredictor<f64> for ConstantPredictor {
    fn input_gradient(&self, x: &[f64], _: Objective) -> Result<Vec<f64>, PredictError> {
        check_dim(self.dim, x)?;
        Ok(vec![0.0; self.dim])
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<(), PredictError> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(PredictError::DimMismatch {
            expected,
            found: x.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes_are_balanced() {
        let mut counts = [0usize; 3];
        for u in uniform_points(30_000, PARAMS, 1) {
            counts[three_class_rule(&u)] += 1;
        }
        assert!(
            counts.iter().all(|&c| (9_000..11_000).contains(&c)),
            "{counts:?}"
        );
        assert_eq!(three_class_rule(&[0.5; PARAMS]), 0);
    }

    #[test]
    fn linear_logit_network_is_exact() {
        let w = [0.3, -0.7, 0.2];
        let m = linear_logit_mlp(&w, 0.1, 4.0);
        for u in uniform_points(20, 3, 2) {
            let a = 4.0 * (w.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() - 0.1);
            let p = m.mlp_predict(&u).unwrap();
            assert_eq!(p.category(), Some(if a > 0.0 { 0 } else { 1 }));
            assert!((p.margin().unwrap() - (a / 2.0).tanh().abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_network_is_exact() {
        let m = monotone_rank_mlp(PARAMS);
        for u in uniform_points(20, PARAMS, 3) {
            assert!((m.mlp_predict(&u).unwrap().rank.unwrap() - 10.0 * u[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn planted_rank_stays_on_scale() {
        for u in uniform_points(1000, PARAMS, 4) {
            assert!((0.0..=10.0).contains(&planted_rank(&u)));
        }
    }
}
