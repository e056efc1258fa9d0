use super::distribution::confidence_margin;
use super::{PredictError, Predictor};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub id: u64,
    pub label: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PseudoLabels {
    pub proposals: Vec<Proposal>,
    /// Records without an input vector.
    pub skipped: Vec<u64>,
}

/// Proposes the predicted category for every record whose margin is at
/// least `tau`. Records with no input are skipped and listed.
pub fn pseudo_label<T: Scalar, P: Predictor<T> + ?Sized>(
    model: &P,
    records: &[(u64, Option<&[T]>)],
    tau: f64,
) -> Result<PseudoLabels, PredictError> {
    let mut out = PseudoLabels::default();
    for &(id, input) in records {
        let Some(x) = input else {
            out.skipped.push(id);
            continue;
        };
        let d = model.predict(x)?.distribution.ok_or_else(|| {
            PredictError::HeadMismatch("pseudo-labelling needs a classifier".into())
        })?;
        let margin = confidence_margin(&d)?.as_f64();
        if margin >= tau {
            out.proposals.push(Proposal {
                id,
                label: d.argmax(),
                margin,
            });
        }
    }
    Ok(out)
}
