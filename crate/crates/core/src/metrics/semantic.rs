use std::collections::BTreeMap;

use super::{ClassScore, Counts, MetricTable};
use crate::class::{ClassId, ClassTable, LabelMap, PixelLabel};
use crate::error::{Error, Result};

/// Per-class pixel confusion counts. Ground-truth pixels without a class
/// (ignore or uncertain) are skipped; a prediction without a class counts
/// only as a miss for the ground-truth class.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfusionCounts {
    tp: Vec<u64>,
    fp: Vec<u64>,
    fn_: Vec<u64>,
}

impl ConfusionCounts {
    pub fn new(num_classes: usize) -> Self {
        ConfusionCounts {
            tp: vec![0; num_classes],
            fp: vec![0; num_classes],
            fn_: vec![0; num_classes],
        }
    }

    pub fn accumulate(&mut self, pred: &LabelMap, gt: &LabelMap) -> Result<()> {
        if pred.dims() != gt.dims() {
            return Err(Error::dims(gt.dims(), pred.dims()));
        }
        let n = self.tp.len();
        for (&p, &g) in pred.codes().iter().zip(gt.codes()) {
            let g = match PixelLabel::from_code(g) {
                PixelLabel::Certain(c) if c.index() < n => c.index(),
                _ => continue,
            };
            match PixelLabel::from_code(p) {
                PixelLabel::Certain(c) if c.index() == g => self.tp[g] += 1,
                PixelLabel::Certain(c) if c.index() < n => {
                    self.fp[c.index()] += 1;
                    self.fn_[g] += 1;
                }
                _ => self.fn_[g] += 1,
            }
        }
        Ok(())
    }

    pub fn merge(mut self, other: ConfusionCounts) -> ConfusionCounts {
        for (a, b) in [
            (&mut self.tp, &other.tp),
            (&mut self.fp, &other.fp),
            (&mut self.fn_, &other.fn_),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self
    }

    /// IoU for every class seen in either map; the mean covers classes
    /// present in the ground truth.
    pub fn finish(&self) -> MetricTable {
        let mut per_class = BTreeMap::new();
        let mut present = Vec::new();
        for c in 0..self.tp.len() {
            let (tp, fp, fn_) = (self.tp[c], self.fp[c], self.fn_[c]);
            let denom = tp + fp + fn_;
            if denom == 0 {
                continue;
            }
            let id = ClassId(c as u8);
            per_class.insert(
                id,
                ClassScore {
                    value: tp as f64 / denom as f64,
                    counts: Some(Counts { tp, fp, fn_ }),
                },
            );
            if tp + fn_ > 0 {
                present.push(id);
            }
        }
        MetricTable::from_scores(per_class, present)
    }
}

/// mIoU of a single prediction/ground-truth pair.
pub fn compute_miou(pred: &LabelMap, gt: &LabelMap, classes: &ClassTable) -> Result<MetricTable> {
    let mut acc = ConfusionCounts::new(classes.len());
    acc.accumulate(pred, gt)?;
    Ok(acc.finish())
}
