use serde::{Deserialize, Serialize};

use super::dataset::{LabeledDataset, Row};
use super::mlp::{Grads, MlpModel, Trace};
use super::{CategoryDistribution, PredictError};
use crate::featurize::Normalizer;
use crate::rng::SplitMix64;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Fit the input normalizer on the training side before training.
    pub fit_normalizer: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            patience: 20,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            fit_normalizer: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

struct Adam<T> {
    m: Grads<T>,
    v: Grads<T>,
    step: i32,
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
}

impl<T: Scalar> Adam<T> {
    fn new(shape: &Grads<T>, c: &TrainConfig) -> Self {
        Self {
            m: shape.clone(),
            v: shape.clone(),
            step: 0,
            lr: T::of(c.learning_rate),
            beta1: T::of(c.beta1),
            beta2: T::of(c.beta2),
            eps: T::of(c.epsilon),
        }
    }

    fn apply(&mut self, params: Vec<&mut [T]>, grads: &Grads<T>) {
        self.step += 1;
        let c1 = T::one() - self.beta1.powi(self.step);
        let c2 = T::one() - self.beta2.powi(self.step);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (T::one() - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (T::one() - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// Per-row loss and output sensitivities (unscaled by batch size).
fn row_loss<T: Scalar>(trace: &Trace<T>, row: &Row<T>) -> (T, Option<Vec<T>>, Option<T>) {
    let mut loss = T::zero();
    let mut d_logits = None;
    let mut d_out = None;
    if let (Some(logits), Some(c)) = (&trace.logits, row.category) {
        let p = CategoryDistribution::softmax(logits);
        // log-softmax directly, to stay finite when p underflows
        let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<T>().ln();
        loss += lse - logits[c];
        let mut d = p.probs().to_vec();
        d[c] -= T::one();
        d_logits = Some(d);
    }
    if let (Some(o), Some(rank)) = (trace.output, row.rank) {
        let err = o - rank / T::of(10.0);
        loss += err * err;
        d_out = Some(T::of(2.0) * err);
    }
    (loss, d_logits, d_out)
}

fn mean_loss<T: Scalar>(model: &MlpModel<T>, rows: &[(&Row<T>, Vec<T>)]) -> f64 {
    let total: f64 = rows
        .iter()
        .map(|(r, n)| row_loss(&model.trace(n.clone()), r).0.as_f64())
        .sum();
    total / rows.len() as f64
}

fn check_heads<T: Scalar>(model: &MlpModel<T>, ds: &LabeledDataset<T>) -> Result<(), PredictError> {
    if ds.input_dim() != model.input_dim() {
        return Err(PredictError::DimMismatch {
            expected: model.input_dim(),
            found: ds.input_dim(),
        });
    }
    if let Some(k) = model.heads().classes() {
        if k != ds.classes() {
            return Err(PredictError::HeadMismatch(format!(
                "classifier has {k} outputs, dataset has {} labels",
                ds.classes()
            )));
        }
        if !ds.train().any(|r| r.category.is_some()) {
            return Err(PredictError::HeadMismatch(
                "classifier head but no categorized training rows".into(),
            ));
        }
    }
    if model.heads().has_regressor() && !ds.train().any(|r| r.rank.is_some()) {
        return Err(PredictError::HeadMismatch(
            "rank head but no ranked training rows".into(),
        ));
    }
    Ok(())
}

/// Mini-batch Adam on softmax cross-entropy and/or squared error on
/// `rank / 10`, with early stopping on validation loss. Returns the
/// best-validation snapshot. Bit-deterministic for a given config.
pub fn mlp_train<T: Scalar>(
    mut model: MlpModel<T>,
    ds: &LabeledDataset<T>,
    config: &TrainConfig,
) -> Result<(MlpModel<T>, History), PredictError> {
    ds.require_split()?;
    check_heads(&model, ds)?;
    if config.batch_size == 0 {
        return Err(PredictError::Config("batch_size must be at least 1".into()));
    }
    if config.fit_normalizer {
        let inputs: Vec<&[T]> = ds.train().map(|r| r.input.as_slice()).collect();
        model.set_normalizer(Normalizer::fit(&inputs)?)?;
    }
    if ds.classes() > 0 && model.classifier().is_some() {
        model.set_label_names(ds.label_names().to_vec())?;
    }
    let normalize = |r: &Row<T>| model.normalizer().normalize(&r.input);
    let train: Vec<(&Row<T>, Vec<T>)> = ds
        .train()
        .map(|r| Ok((r, normalize(r)?)))
        .collect::<Result<_, PredictError>>()?;
    let validation: Vec<(&Row<T>, Vec<T>)> = ds
        .validation()
        .map(|r| Ok((r, normalize(r)?)))
        .collect::<Result<_, PredictError>>()?;

    let mut rng = SplitMix64::new(config.seed);
    let mut adam = Adam::new(&model.zero_grads(), config);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = History::default();
    let mut best = (f64::INFINITY, model.clone());
    let mut stale = 0;

    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let scale = T::one() / T::of(batch.len() as f64);
            let mut grads = model.zero_grads();
            for &i in batch {
                let (row, normalized) = &train[i];
                let trace = model.trace(normalized.clone());
                let (loss, d_logits, d_out) = row_loss(&trace, row);
                epoch_loss += loss.as_f64();
                let d_logits =
                    d_logits.map(|d| d.into_iter().map(|v| v * scale).collect::<Vec<_>>());
                model.backward(
                    &trace,
                    d_logits.as_deref(),
                    d_out.map(|d| d * scale),
                    Some(&mut grads),
                );
            }
            adam.apply(model.params_mut(), &grads);
        }
        history.train_loss.push(epoch_loss / train.len() as f64);
        let val = mean_loss(&model, &validation);
        history.validation_loss.push(val);
        if val < best.0 {
            best = (val, model.clone());
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                history.stopped_early = true;
                break;
            }
        }
    }

    let mut trained = best.1;
    let manifest = trained.manifest_mut();
    manifest.epochs_run = history.train_loss.len();
    manifest.best_epoch = history.best_epoch;
    manifest.train_loss = history.train_loss.clone();
    manifest.validation_loss = history.validation_loss.clone();
    manifest.config = Some(config.clone());
    Ok((trained, history))
}

/// Mean loss of `model` over one side of the dataset.
pub fn dataset_loss<T: Scalar>(
    model: &MlpModel<T>,
    ds: &LabeledDataset<T>,
    split: super::Split,
) -> Result<f64, PredictError> {
    let rows: Vec<(&Row<T>, Vec<T>)> = ds
        .side(split)
        .map(|r| Ok((r, model.normalizer().normalize(&r.input)?)))
        .collect::<Result<_, PredictError>>()?;
    if rows.is_empty() {
        return Err(PredictError::EmptySplit(split));
    }
    Ok(mean_loss(model, &rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predict::{HeadKind, Split};

    #[test]
    fn parameter_gradients_match_finite_differences() {
        let mut model = MlpModel::<f64>::init(4, [5, 3], HeadKind::Both(3), 2).unwrap();
        for p in model.params_mut() {
            for (i, v) in p.iter_mut().enumerate() {
                *v += 0.05 * ((i % 7) as f64 - 3.0);
            }
        }
        let row = Row {
            input: vec![0.3, -0.8, 1.1, 0.4],
            category: Some(2),
            rank: Some(6.5),
            split: Split::Train,
        };
        let loss = |m: &MlpModel<f64>| row_loss(&m.trace(row.input.clone()), &row).0;
        let trace = model.trace(row.input.clone());
        let (_, dl, d_out) = row_loss(&trace, &row);
        let mut grads = model.zero_grads();
        model.backward(&trace, dl.as_deref(), d_out, Some(&mut grads));
        let h = 1e-6;
        for (slot, g) in grads.iter().enumerate() {
            for (i, &gi) in g.iter().enumerate() {
                let mut plus = model.clone();
                plus.params_mut()[slot][i] += h;
                let mut minus = model.clone();
                minus.params_mut()[slot][i] -= h;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                assert!(
                    (numeric - gi).abs() < 1e-6,
                    "slot {slot} index {i}: {numeric} vs {gi}"
                );
            }
        }
    }
}
