use serde::{Deserialize, Serialize};

use super::dataset::LabeledDataset;
use super::distribution::{confidence_margin, CategoryDistribution};
use super::{PredictError, Predictor};
use crate::Scalar;

/// Accuracy of one confidence quartile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuartileRow {
    /// Position of the quartile in the margin ordering, in percent.
    pub lower_pct: u8,
    pub upper_pct: u8,
    pub margin_min: f64,
    pub margin_max: f64,
    pub count: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    /// Validation rows with a category.
    pub classified: usize,
    /// Validation rows with a rank.
    pub ranked: usize,
    pub accuracy: Option<f64>,
    pub rank_rmse: Option<f64>,
    /// Rows are true labels, columns predictions.
    pub confusion: Option<Vec<Vec<usize>>>,
    pub quartiles: Option<Vec<QuartileRow>>,
}

/// Sorts by margin ascending (stable), splits into four groups whose sizes
/// differ by at most one with the extra rows going to the lower quartiles,
/// and reports accuracy per group from lowest to highest confidence.
pub fn quartile_report<T: Scalar>(
    preds: &[(CategoryDistribution<T>, usize)],
) -> Result<Vec<QuartileRow>, PredictError> {
    if preds.len() < 4 {
        return Err(PredictError::TooFewRows {
            needed: 4,
            found: preds.len(),
        });
    }
    let mut scored = preds
        .iter()
        .map(|(p, truth)| Ok((confidence_margin(p)?.as_f64(), p.argmax() == *truth)))
        .collect::<Result<Vec<_>, PredictError>>()?;
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite margins"));
    let (base, extra) = (scored.len() / 4, scored.len() % 4);
    let mut start = 0;
    let mut rows = Vec::with_capacity(4);
    for q in 0..4 {
        let size = base + usize::from(q < extra);
        let group = &scored[start..start + size];
        start += size;
        let correct = group.iter().filter(|g| g.1).count();
        rows.push(QuartileRow {
            lower_pct: (25 * q) as u8,
            upper_pct: (25 * (q + 1)) as u8,
            margin_min: group.first().map_or(0.0, |g| g.0),
            margin_max: group.last().map_or(0.0, |g| g.0),
            count: size,
            correct,
            accuracy: correct as f64 / size as f64,
        });
    }
    Ok(rows)
}

pub fn confusion_matrix(
    predicted: &[usize],
    truths: &[usize],
    classes: usize,
) -> Result<Vec<Vec<usize>>, PredictError> {
    if predicted.len() != truths.len() {
        return Err(PredictError::Shape(format!(
            "{} predictions for {} truths",
            predicted.len(),
            truths.len()
        )));
    }
    let mut m = vec![vec![0; classes]; classes];
    for (&p, &t) in predicted.iter().zip(truths) {
        let bad = if p >= classes {
            Some(p)
        } else if t >= classes {
            Some(t)
        } else {
            None
        };
        if let Some(label) = bad {
            return Err(PredictError::LabelOutOfRange { label, classes });
        }
        m[t][p] += 1;
    }
    Ok(m)
}

/// Scores `model` on the validation side of `ds`.
pub fn evaluate<T: Scalar, P: Predictor<T> + ?Sized>(
    model: &P,
    ds: &LabeledDataset<T>,
) -> Result<Metrics, PredictError> {
    let rows: Vec<_> = ds.validation().collect();
    if rows.is_empty() {
        return Err(PredictError::EmptySplit(super::Split::Validation));
    }
    let mut class_preds = Vec::new();
    let mut sq_err = 0.0;
    let mut ranked = 0;
    for r in &rows {
        let p = model.predict(&r.input)?;
        if let (Some(d), Some(c)) = (p.distribution, r.category) {
            class_preds.push((d, c));
        }
        if let (Some(pred), Some(truth)) = (p.rank, r.rank) {
            sq_err += (pred.as_f64() - truth.as_f64()).powi(2);
            ranked += 1;
        }
    }
    let mut metrics = Metrics {
        classified: class_preds.len(),
        ranked,
        ..Default::default()
    };
    if ranked > 0 {
        metrics.rank_rmse = Some((sq_err / ranked as f64).sqrt());
    }
    if !class_preds.is_empty() {
        let predicted: Vec<usize> = class_preds.iter().map(|(d, _)| d.argmax()).collect();
        let truths: Vec<usize> = class_preds.iter().map(|(_, c)| *c).collect();
        let k = ds.classes().max(class_preds[0].0.len());
        let confusion = confusion_matrix(&predicted, &truths, k)?;
        let trace: usize = (0..k).map(|i| confusion[i][i]).sum();
        metrics.accuracy = Some(trace as f64 / class_preds.len() as f64);
        metrics.confusion = Some(confusion);
        if class_preds.len() >= 4 && k >= 2 {
            metrics.quartiles = Some(quartile_report(&class_preds)?);
        }
    }
    Ok(metrics)
}
