//! Pseudo-label training losses with analytic gradients.
//!
//! Both losses clamp probabilities to `[EPS, 1 - EPS]` before taking logs.

use super::prediction::SemanticPrediction;
use crate::class::LabelMap;
use crate::error::{Error, Result};
use crate::mask::BinaryMask;

pub const EPS: f64 = 1e-7;

/// Per-pixel probabilities of one binary target.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbGrid {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl ProbGrid {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), height * width);
        ProbGrid {
            height,
            width,
            values,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }
}

/// Loss value and its gradient with respect to each input probability.
#[derive(Clone, Debug, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub gradient: Vec<f64>,
}

fn clamp(p: f64) -> f64 {
    p.clamp(EPS, 1.0 - EPS)
}

/// Mean binary cross-entropy over all pixels, with uncertain pixels
/// contributing zero loss and zero gradient.
pub fn uncertainty_guided_bce(
    pred: &ProbGrid,
    certain_target: &BinaryMask,
    uncertain: &BinaryMask,
) -> Result<LossOutput> {
    for m in [certain_target, uncertain] {
        if m.dims() != pred.dims() {
            return Err(Error::dims(pred.dims(), m.dims()));
        }
    }
    let n = pred.values.len();
    let mut gradient = vec![0.0; n];
    if n == 0 {
        return Ok(LossOutput {
            loss: 0.0,
            gradient,
        });
    }
    let scale = 1.0 / n as f64;
    let mut total = 0.0;
    for (i, &raw) in pred.values.iter().enumerate() {
        if uncertain.get_index(i) {
            continue;
        }
        let p = clamp(raw);
        if certain_target.get_index(i) {
            total -= p.ln();
            gradient[i] = -scale / p;
        } else {
            total -= (1.0 - p).ln();
            gradient[i] = scale / (1.0 - p);
        }
    }
    Ok(LossOutput {
        loss: total * scale,
        gradient,
    })
}

/// Mean of `-ln p[target]` over pixels carrying a certain class.
/// The gradient is planar like the prediction.
pub fn masked_cross_entropy(sem: &SemanticPrediction, target: &LabelMap) -> Result<LossOutput> {
    if sem.dims() != target.dims() {
        return Err(Error::dims(sem.dims(), target.dims()));
    }
    let n = sem.pixels();
    let mut gradient = vec![0.0; sem.probs().len()];
    let certain: Vec<(usize, usize)> = (0..n)
        .filter_map(|i| {
            target
                .class_at(i)
                .filter(|c| c.index() < sem.num_classes())
                .map(|c| (i, c.index()))
        })
        .collect();
    if certain.is_empty() {
        return Ok(LossOutput {
            loss: 0.0,
            gradient,
        });
    }
    let scale = 1.0 / certain.len() as f64;
    let mut total = 0.0;
    for (i, c) in certain {
        let p = clamp(sem.prob(c, i));
        total -= p.ln();
        gradient[c * n + i] = -scale / p;
    }
    Ok(LossOutput {
        loss: total * scale,
        gradient,
    })
}
