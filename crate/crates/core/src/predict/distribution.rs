use serde::{Deserialize, Serialize};

use super::PredictError;
use crate::Scalar;

/// Probabilities over K categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDistribution<T> {
    probs: Vec<T>,
}

impl<T: Scalar> CategoryDistribution<T> {
    /// Accepts non-negative entries summing to 1 within 1e-6.
    pub fn new(probs: Vec<T>) -> Result<Self, PredictError> {
        let sum: f64 = probs.iter().map(|p| p.as_f64()).sum();
        let ok = !probs.is_empty()
            && probs
                .iter()
                .all(|p| p.is_finite() && *p >= T::zero() && *p <= T::one())
            && (sum - 1.0).abs() <= 1e-6;
        if ok {
            Ok(Self { probs })
        } else {
            Err(PredictError::InvalidDistribution)
        }
    }

    /// Numerically stable softmax: subtracts the max logit first.
    pub fn softmax(logits: &[T]) -> Self {
        let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
        let total: T = exps.iter().copied().sum();
        Self {
            probs: exps.into_iter().map(|e| e / total).collect(),
        }
    }

    /// Uniform over `k` categories.
    pub fn uniform(k: usize) -> Self {
        Self {
            probs: vec![T::one() / T::of(k as f64); k],
        }
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Highest probability; ties go to the lower label id.
    pub fn argmax(&self) -> usize {
        self.top_two().0
    }

    /// Indices of the best and second-best categories, ties toward lower ids.
    /// For K = 1 both are 0.
    pub fn top_two(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        let mut second = usize::MAX;
        for (i, &p) in self.probs.iter().enumerate() {
            if i != best && (second == usize::MAX || p > self.probs[second]) {
                second = i;
            }
        }
        (best, if second == usize::MAX { best } else { second })
    }
}

/// Probability of the predicted category minus that of the strongest
/// alternative.
pub fn confidence_margin<T: Scalar>(p: &CategoryDistribution<T>) -> Result<T, PredictError> {
    if p.len() < 2 {
        return Err(PredictError::TooFewClasses(p.len()));
    }
    let (a, b) = p.top_two();
    Ok(p.probs[a] - p.probs[b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(p: &[f64]) -> CategoryDistribution<f64> {
        CategoryDistribution::new(p.to_vec()).unwrap()
    }

    #[test]
    fn margin_examples() {
        assert!((confidence_margin(&dist(&[0.7, 0.2, 0.1])).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(confidence_margin(&dist(&[0.25; 4])).unwrap(), 0.0);
        assert_eq!(confidence_margin(&dist(&[0.0, 1.0, 0.0])).unwrap(), 1.0);
        assert!(matches!(
            confidence_margin(&dist(&[1.0])),
            Err(PredictError::TooFewClasses(1))
        ));
    }

    #[test]
    fn ties_prefer_lower_ids() {
        assert_eq!(dist(&[0.4, 0.4, 0.2]).top_two(), (0, 1));
        assert_eq!(dist(&[0.2, 0.4, 0.4]).top_two(), (1, 2));
        assert_eq!(dist(&[0.5, 0.25, 0.25]).top_two(), (0, 1));
    }

    #[test]
    fn zero_logits_are_uniform() {
        assert_eq!(
            CategoryDistribution::<f64>::softmax(&[0.0; 4]).probs(),
            &[0.25; 4]
        );
    }

    #[test]
    fn rejects_bad_distributions() {
        assert!(CategoryDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(CategoryDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(CategoryDistribution::<f64>::new(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(logits in proptest::collection::vec(-50.0f64..50.0, 2..10), shift in -100.0f64..100.0) {
            let p = CategoryDistribution::softmax(&logits);
            let sum: f64 = p.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            prop_assert!(p.probs().iter().all(|&x| x > 0.0 && x <= 1.0));

            let shifted: Vec<f64> = logits.iter().map(|z| z + shift).collect();
            let q = CategoryDistribution::softmax(&shifted);
            prop_assert_eq!(p.argmax(), q.argmax());
            for (a, b) in p.probs().iter().zip(q.probs()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            let (ma, mb) = (confidence_margin(&p).unwrap(), confidence_margin(&q).unwrap());
            prop_assert!((ma - mb).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&ma));
        }
    }
}
