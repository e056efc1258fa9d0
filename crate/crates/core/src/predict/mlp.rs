//! Two-hidden-layer perceptron with a softmax classifier head, a scalar rank
//! head, or both.
//!
//! Forward equations, for raw input `x`:
//!
//! ```text
//! n  = (x - mean) / std
//! h1 = relu(W1 n + b1)
//! h2 = relu(W2 h1 + b2)
//! logits = Wc h2 + bc          p = softmax(logits)
//! o  = wr . h2 + br            rank = clamp(10 o, 0, 10)
//! ```
//!
//! `relu'(0)` is taken as 0. The rank objective of [`MlpModel::input_gradient`]
//! differentiates the unclamped `10 o`.

use serde::{Deserialize, Serialize};

use super::distribution::{confidence_margin, CategoryDistribution};
use super::{GradientPredictor, Objective, PredictError, Prediction, Predictor, TrainConfig};
use crate::featurize::Normalizer;
use crate::rng::SplitMix64;
use crate::Scalar;

pub const DEFAULT_HIDDEN: [usize; 2] = [200, 100];

/// Fully connected layer; `weights` is row-major `[outputs][inputs]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
        }
    }

    /// Weights uniform in [-sqrt(6 / fan_in), sqrt(6 / fan_in)), zero bias.
    fn init(inputs: usize, outputs: usize, rng: &mut SplitMix64) -> Self {
        let a = (6.0 / inputs as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| T::of(rng.uniform(-a, a)))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![T::zero(); outputs],
        }
    }

    pub fn from_parts(
        inputs: usize,
        outputs: usize,
        weights: Vec<T>,
        bias: Vec<T>,
    ) -> Result<Self, PredictError> {
        if weights.len() != inputs * outputs || bias.len() != outputs {
            return Err(PredictError::Shape(format!(
                "dense {inputs}->{outputs} needs {} weights and {outputs} biases, got {} and {}",
                inputs * outputs,
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            bias,
        })
    }

    fn forward(&self, x: &[T]) -> Vec<T> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (&w, &v)| acc + w * v))
            .collect()
    }

    /// `W^T delta`
    fn backward_input(&self, delta: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.inputs];
        for (row, &d) in self.weights.chunks_exact(self.inputs).zip(delta) {
            if d != T::zero() {
                for (o, &w) in out.iter_mut().zip(row) {
                    *o += w * d;
                }
            }
        }
        out
    }

    /// Adds the outer product `delta x^T` to `g[0]` and `delta` to `g[1]`.
    fn accumulate(&self, delta: &[T], x: &[T], g: &mut [Vec<T>]) {
        let (gw, gb) = g.split_at_mut(1);
        for ((grow, &d), b) in gw[0]
            .chunks_exact_mut(self.inputs)
            .zip(delta)
            .zip(gb[0].iter_mut())
        {
            if d != T::zero() {
                for (g, &v) in grow.iter_mut().zip(x) {
                    *g += d * v;
                }
                *b += d;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "classes", rename_all = "lowercase")]
pub enum HeadKind {
    Classifier(usize),
    Regressor,
    Both(usize),
}

impl HeadKind {
    pub fn classes(self) -> Option<usize> {
        match self {
            HeadKind::Classifier(k) | HeadKind::Both(k) => Some(k),
            HeadKind::Regressor => None,
        }
    }

    pub fn has_regressor(self) -> bool {
        matches!(self, HeadKind::Regressor | HeadKind::Both(_))
    }
}

/// Record of how a model was produced.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub config: Option<TrainConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    pub(crate) hidden: [Dense<T>; 2],
    pub(crate) classifier: Option<Dense<T>>,
    pub(crate) regressor: Option<Dense<T>>,
    pub(crate) normalizer: Normalizer<T>,
    pub(crate) label_names: Vec<String>,
    pub(crate) manifest: TrainingManifest,
}

/// Intermediate values of one forward pass.
pub(crate) struct Trace<T> {
    pub normalized: Vec<T>,
    pub z1: Vec<T>,
    pub h1: Vec<T>,
    pub z2: Vec<T>,
    pub h2: Vec<T>,
    pub logits: Option<Vec<T>>,
    pub output: Option<T>,
}

/// Gradients in the parameter order used by [`MlpModel::params`].
pub(crate) type Grads<T> = Vec<Vec<T>>;

fn relu<T: Scalar>(z: &[T]) -> Vec<T> {
    z.iter().map(|&v| v.max(T::zero())).collect()
}

fn relu_mask<T: Scalar>(delta: &mut [T], z: &[T]) {
    for (d, &v) in delta.iter_mut().zip(z) {
        if v <= T::zero() {
            *d = T::zero();
        }
    }
}

/// Default architecture: `d -> 200 -> 100 -> heads`.
pub fn mlp_init<T: Scalar>(
    input_dim: usize,
    heads: HeadKind,
    seed: u64,
) -> Result<MlpModel<T>, PredictError> {
    MlpModel::init(input_dim, DEFAULT_HIDDEN, heads, seed)
}

impl<T: Scalar> MlpModel<T> {
    /// Layers are drawn in order first hidden, second hidden, classifier,
    /// regressor, each weight matrix row-major, from one seeded stream.
    pub fn init(
        input_dim: usize,
        hidden: [usize; 2],
        heads: HeadKind,
        seed: u64,
    ) -> Result<Self, PredictError> {
        if input_dim == 0 || hidden.contains(&0) {
            return Err(PredictError::Shape(
                "input and hidden sizes must be at least 1".into(),
            ));
        }
        if heads.classes() == Some(0) {
            return Err(PredictError::Shape(
                "classifier needs at least one class".into(),
            ));
        }
        let mut rng = SplitMix64::new(seed);
        let h1 = Dense::init(input_dim, hidden[0], &mut rng);
        let h2 = Dense::init(hidden[0], hidden[1], &mut rng);
        let classifier = heads.classes().map(|k| Dense::init(hidden[1], k, &mut rng));
        let regressor = heads
            .has_regressor()
            .then(|| Dense::init(hidden[1], 1, &mut rng));
        let label_names = (0..heads.classes().unwrap_or(0))
            .map(|i| format!("class{i}"))
            .collect();
        Ok(Self {
            hidden: [h1, h2],
            classifier,
            regressor,
            normalizer: Normalizer::identity(input_dim),
            label_names,
            manifest: TrainingManifest {
                seed,
                ..Default::default()
            },
        })
    }

    /// Assembles a model from explicit layers; used for hand-built fixtures
    /// and checkpoint loading.
    pub fn from_layers(
        hidden: [Dense<T>; 2],
        classifier: Option<Dense<T>>,
        regressor: Option<Dense<T>>,
        normalizer: Normalizer<T>,
    ) -> Result<Self, PredictError> {
        let [h1, h2] = &hidden;
        let mut ok = h2.inputs == h1.outputs && normalizer.dim() == h1.inputs;
        ok &= classifier.as_ref().is_none_or(|c| c.inputs == h2.outputs);
        ok &= regressor
            .as_ref()
            .is_none_or(|r| r.inputs == h2.outputs && r.outputs == 1);
        ok &= classifier.is_some() || regressor.is_some();
        if !ok {
            return Err(PredictError::Shape("inconsistent layer dimensions".into()));
        }
        let k = classifier.as_ref().map_or(0, |c| c.outputs);
        Ok(Self {
            hidden,
            classifier,
            regressor,
            normalizer,
            label_names: (0..k).map(|i| format!("class{i}")).collect(),
            manifest: TrainingManifest::default(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.hidden[0].inputs
    }

    pub fn hidden_sizes(&self) -> [usize; 2] {
        [self.hidden[0].outputs, self.hidden[1].outputs]
    }

    pub fn heads(&self) -> HeadKind {
        match (&self.classifier, &self.regressor) {
            (Some(c), Some(_)) => HeadKind::Both(c.outputs),
            (Some(c), None) => HeadKind::Classifier(c.outputs),
            _ => HeadKind::Regressor,
        }
    }

    pub fn layers(&self) -> &[Dense<T>; 2] {
        &self.hidden
    }

    pub fn classifier(&self) -> Option<&Dense<T>> {
        self.classifier.as_ref()
    }

    pub fn regressor(&self) -> Option<&Dense<T>> {
        self.regressor.as_ref()
    }

    pub fn normalizer(&self) -> &Normalizer<T> {
        &self.normalizer
    }

    pub fn set_normalizer(&mut self, normalizer: Normalizer<T>) -> Result<(), PredictError> {
        if normalizer.dim() != self.input_dim() {
            return Err(PredictError::DimMismatch {
                expected: self.input_dim(),
                found: normalizer.dim(),
            });
        }
        self.normalizer = normalizer;
        Ok(())
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn set_label_names(&mut self, names: Vec<String>) -> Result<(), PredictError> {
        if Some(names.len()) != self.heads().classes()
            && !(names.is_empty() && self.classifier.is_none())
        {
            return Err(PredictError::HeadMismatch(format!(
                "{} label names for head {:?}",
                names.len(),
                self.heads()
            )));
        }
        self.label_names = names;
        Ok(())
    }

    pub fn manifest(&self) -> &TrainingManifest {
        &self.manifest
    }

    pub(crate) fn manifest_mut(&mut self) -> &mut TrainingManifest {
        &mut self.manifest
    }

    /// Every parameter slice in the fixed order: hidden 1 weights, bias,
    /// hidden 2 weights, bias, classifier weights, bias, regressor weights,
    /// bias. Absent heads are skipped.
    pub fn params(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::new();
        for layer in self
            .hidden
            .iter()
            .chain(&self.classifier)
            .chain(&self.regressor)
        {
            out.push(&layer.weights);
            out.push(&layer.bias);
        }
        out
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for layer in self
            .hidden
            .iter_mut()
            .chain(self.classifier.as_mut())
            .chain(self.regressor.as_mut())
        {
            out.push(&mut layer.weights);
            out.push(&mut layer.bias);
        }
        out
    }

    fn check_dim(&self, x: &[T]) -> Result<(), PredictError> {
        if x.len() != self.input_dim() {
            return Err(PredictError::DimMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn trace(&self, normalized: Vec<T>) -> Trace<T> {
        let z1 = self.hidden[0].forward(&normalized);
        let h1 = relu(&z1);
        let z2 = self.hidden[1].forward(&h1);
        let h2 = relu(&z2);
        let logits = self.classifier.as_ref().map(|c| c.forward(&h2));
        let output = self.regressor.as_ref().map(|r| r.forward(&h2)[0]);
        Trace {
            normalized,
            z1,
            h1,
            z2,
            h2,
            logits,
            output,
        }
    }

    pub(crate) fn trace_raw(&self, x: &[T]) -> Result<Trace<T>, PredictError> {
        self.check_dim(x)?;
        Ok(self.trace(self.normalizer.normalize(x)?))
    }

    /// Backpropagates output sensitivities through `trace`. Returns the
    /// gradient with respect to the normalized input and, if `grads` is
    /// given, accumulates parameter gradients into it.
    pub(crate) fn backward(
        &self,
        trace: &Trace<T>,
        d_logits: Option<&[T]>,
        d_output: Option<T>,
        grads: Option<&mut Grads<T>>,
    ) -> Vec<T> {
        let [h1l, h2l] = &self.hidden;
        let mut d_h2 = vec![T::zero(); h2l.outputs];
        if let (Some(c), Some(dl)) = (&self.classifier, d_logits) {
            for (a, b) in d_h2.iter_mut().zip(c.backward_input(dl)) {
                *a += b;
            }
        }
        if let (Some(r), Some(d)) = (&self.regressor, d_output) {
            for (a, b) in d_h2.iter_mut().zip(r.backward_input(&[d])) {
                *a += b;
            }
        }
        let mut d_z2 = d_h2;
        relu_mask(&mut d_z2, &trace.z2);
        let mut d_z1 = h2l.backward_input(&d_z2);
        relu_mask(&mut d_z1, &trace.z1);
        let d_n = h1l.backward_input(&d_z1);

        if let Some(g) = grads {
            h1l.accumulate(&d_z1, &trace.normalized, &mut g[0..2]);
            h2l.accumulate(&d_z2, &trace.h1, &mut g[2..4]);
            let mut slot = 4;
            if let Some(c) = &self.classifier {
                if let Some(dl) = d_logits {
                    c.accumulate(dl, &trace.h2, &mut g[slot..slot + 2]);
                }
                slot += 2;
            }
            if let (Some(r), Some(d)) = (&self.regressor, d_output) {
                r.accumulate(&[d], &trace.h2, &mut g[slot..slot + 2]);
            }
        }
        d_n
    }

    pub(crate) fn zero_grads(&self) -> Grads<T> {
        self.params()
            .iter()
            .map(|p| vec![T::zero(); p.len()])
            .collect()
    }

    pub fn mlp_predict(&self, x: &[T]) -> Result<Prediction<T>, PredictError> {
        let trace = self.trace_raw(x)?;
        Ok(Prediction {
            distribution: trace.logits.as_deref().map(CategoryDistribution::softmax),
            rank: trace
                .output
                .map(|o| (T::of(10.0) * o).max(T::zero()).min(T::of(10.0))),
        })
    }

    /// Exact gradient of a scalar objective with respect to the raw input.
    pub fn input_gradient(&self, x: &[T], objective: Objective) -> Result<Vec<T>, PredictError> {
        let trace = self.trace_raw(x)?;
        let d_n = match objective {
            Objective::Rank => {
                if self.regressor.is_none() {
                    return Err(PredictError::HeadMismatch(
                        "rank objective needs a regressor head".into(),
                    ));
                }
                self.backward(&trace, None, Some(T::of(10.0)), None)
            }
            Objective::ClassProbability(_) | Objective::Margin if self.classifier.is_none() => {
                return Err(PredictError::HeadMismatch(
                    "objective needs a classifier head".into(),
                ));
            }
            Objective::ClassProbability(c) => {
                let logits = trace.logits.as_deref().expect("classifier present");
                if c >= logits.len() {
                    return Err(PredictError::LabelOutOfRange {
                        label: c,
                        classes: logits.len(),
                    });
                }
                let p = CategoryDistribution::softmax(logits);
                let d = softmax_vjp(p.probs(), c, None);
                self.backward(&trace, Some(&d), None, None)
            }
            Objective::Margin => {
                let logits = trace.logits.as_deref().expect("classifier present");
                let p = CategoryDistribution::softmax(logits);
                if p.len() < 2 {
                    return Err(PredictError::TooFewClasses(p.len()));
                }
                let (a, b) = p.top_two();
                let d = softmax_vjp(p.probs(), a, Some(b));
                self.backward(&trace, Some(&d), None, None)
            }
        };
        Ok(d_n
            .iter()
            .zip(self.normalizer.std())
            .map(|(&g, &s)| g / s)
            .collect())
    }
}

/// Gradient of `p_a - p_b` (or `p_a` when `b` is `None`) with respect to the
/// logits: `dp_a/dz_k = p_a (delta_ak - p_k)`.
fn softmax_vjp<T: Scalar>(p: &[T], a: usize, b: Option<usize>) -> Vec<T> {
    let mut d: Vec<T> = (0..p.len())
        .map(|k| p[a] * ((if k == a { T::one() } else { T::zero() }) - p[k]))
        .collect();
    if let Some(b) = b {
        for (k, dk) in d.iter_mut().enumerate() {
            *dk -= p[b] * ((if k == b { T::one() } else { T::zero() }) - p[k]);
        }
    }
    d
}

impl<T: Scalar> Predictor<T> for MlpModel<T> {
    fn input_dim(&self) -> usize {
        MlpModel::input_dim(self)
    }

    fn predict(&self, x: &[T]) -> Result<Prediction<T>, PredictError> {
        self.mlp_predict(x)
    }
}

impl<T: Scalar> GradientPredictor<T> for MlpModel<T> {
    fn input_gradient(&self, x: &[T], objective: Objective) -> Result<Vec<T>, PredictError> {
        MlpModel::input_gradient(self, x, objective)
    }
}

impl<T: Scalar> MlpModel<T> {
    /// Margin at `x`; 0 for single-class heads.
    pub fn margin(&self, x: &[T]) -> Result<T, PredictError> {
        let p = self
            .mlp_predict(x)?
            .distribution
            .ok_or_else(|| PredictError::HeadMismatch("no classifier head".into()))?;
        Ok(confidence_margin(&p).unwrap_or(T::zero()))
    }
}
