use serde::{Deserialize, Serialize};

use crate::class::{ClassId, LabelMap, PixelLabel};
use crate::error::{Error, Result};
use crate::mask::BinaryMask;

/// Per-pixel normalization tolerance for semantic probabilities.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-5;

/// The three prediction heads whose outputs get pseudo-labeled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Semantic,
    Instance,
    Amodal,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Semantic, Branch::Instance, Branch::Amodal];

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Semantic => "semantic",
            Branch::Instance => "instance",
            Branch::Amodal => "amodal",
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Class probabilities per pixel, stored planar: `probs[c * H * W + i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticPrediction {
    height: usize,
    width: usize,
    num_classes: usize,
    probs: Vec<f64>,
}

impl SemanticPrediction {
    /// Validates shape, non-negativity and per-pixel normalization.
    pub fn new(height: usize, width: usize, num_classes: usize, probs: Vec<f64>) -> Result<Self> {
        let pred = SemanticPrediction::new_unchecked(height, width, num_classes, probs)?;
        for i in 0..height * width {
            let mut sum = 0.0;
            for c in 0..num_classes {
                let p = pred.prob(c, i);
                if p.is_nan() || p < 0.0 {
                    return Err(Error::ConfigInvalid(format!(
                        "probability {p} at pixel {i}, class {c}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(Error::ConfigInvalid(format!(
                    "probabilities at pixel {i} sum to {sum}"
                )));
            }
        }
        Ok(pred)
    }

    /// Shape check only. Loss gradients are probed with unnormalized inputs.
    pub fn new_unchecked(
        height: usize,
        width: usize,
        num_classes: usize,
        probs: Vec<f64>,
    ) -> Result<Self> {
        if num_classes == 0 || probs.len() != height * width * num_classes {
            return Err(Error::ConfigInvalid(format!(
                "{} probabilities for a {height}x{width}x{num_classes} prediction",
                probs.len()
            )));
        }
        Ok(SemanticPrediction {
            height,
            width,
            num_classes,
            probs,
        })
    }

    /// Softened one-hot encoding of a class map: the labeled class gets
    /// `1 - softness`, the rest share `softness` evenly. Non-class codes
    /// become uniform.
    pub fn from_label_map(labels: &LabelMap, num_classes: usize, softness: f64) -> Result<Self> {
        let (h, w) = labels.dims();
        let n = h * w;
        let off = if num_classes > 1 {
            softness / (num_classes - 1) as f64
        } else {
            0.0
        };
        let mut probs = vec![0.0; n * num_classes];
        for i in 0..n {
            match labels.class_at(i) {
                Some(c) if c.index() < num_classes => {
                    for k in 0..num_classes {
                        probs[k * n + i] = if k == c.index() { 1.0 - softness } else { off };
                    }
                }
                _ => {
                    for k in 0..num_classes {
                        probs[k * n + i] = 1.0 / num_classes as f64;
                    }
                }
            }
        }
        SemanticPrediction::new(h, w, num_classes, probs)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, class: usize, pixel: usize) -> f64 {
        self.probs[class * self.pixels() + pixel]
    }

    /// Most probable class and its probability; ties go to the lowest id.
    pub fn argmax(&self, pixel: usize) -> (ClassId, f64) {
        let mut best = (0usize, self.prob(0, pixel));
        for c in 1..self.num_classes {
            let p = self.prob(c, pixel);
            if p > best.1 {
                best = (c, p);
            }
        }
        (ClassId(best.0 as u8), best.1)
    }

    pub fn argmax_map(&self) -> LabelMap {
        let codes = (0..self.pixels())
            .map(|i| PixelLabel::Certain(self.argmax(i).0).code())
            .collect();
        LabelMap::from_codes(self.height, self.width, codes)
    }
}

/// One predicted object: a thing class, a confidence and a mask.
///
/// `object_seq` is a dataset-wide ordinal used to order equal scores.
#[derive(Clone, Debug, PartialEq)]
pub struct InstancePrediction {
    pub class: ClassId,
    pub score: f64,
    pub mask: BinaryMask,
    pub object_seq: u64,
}

impl InstancePrediction {
    pub fn new(class: ClassId, score: f64, mask: BinaryMask, object_seq: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::ConfigInvalid(format!(
                "score {score} outside [0, 1]"
            )));
        }
        if mask.is_empty() {
            return Err(Error::ConfigInvalid("instance mask is empty".into()));
        }
        Ok(InstancePrediction {
            class,
            score,
            mask,
            object_seq,
        })
    }
}

/// Descending score, then ascending `object_seq`.
pub fn rank_order(a: &InstancePrediction, b: &InstancePrediction) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.object_seq.cmp(&b.object_seq))
}
