use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::{ClassScore, MetricTable};
use crate::class::ClassId;
use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::opll::{rank_order, InstancePrediction};

/// IoU thresholds in percent: 50, 55, ..., 95.
pub const IOU_THRESHOLDS_PCT: [u64; 10] = [50, 55, 60, 65, 70, 75, 80, 85, 90, 95];

#[derive(Clone, Debug, PartialEq)]
pub struct GtInstance {
    pub class: ClassId,
    pub mask: BinaryMask,
}

#[derive(Clone, Debug)]
struct Detection {
    score: f64,
    image: usize,
    seq: u64,
    hits: [bool; 10],
}

#[derive(Clone, Debug, Default)]
struct ClassDetections {
    num_gt: u64,
    detections: Vec<Detection>,
}

/// Average precision over the ten IoU thresholds, all-point interpolated.
///
/// Within an image, predictions are visited in descending score order and
/// each takes the unmatched same-class ground truth of highest IoU that
/// meets the threshold. Detections are ranked across images by score, then
/// image order, then sequence number.
#[derive(Clone, Debug, Default)]
pub struct ApAccumulator {
    images: usize,
    per_class: BTreeMap<ClassId, ClassDetections>,
}

fn iou_cmp(a: (u64, u64), b: (u64, u64)) -> Ordering {
    ((a.0 as u128) * (b.1 as u128)).cmp(&((b.0 as u128) * (a.1 as u128)))
}

impl ApAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn accumulate(&mut self, preds: &[InstancePrediction], gts: &[GtInstance]) -> Result<()> {
        let image = self.images;
        self.images += 1;
        for g in gts {
            self.per_class.entry(g.class).or_default().num_gt += 1;
        }
        let mut order: Vec<&InstancePrediction> = preds.iter().collect();
        order.sort_by(|a, b| rank_order(a, b));
        // (intersection, union) per prediction and ground truth
        let mut overlaps = Vec::with_capacity(order.len());
        for p in &order {
            let mut row = Vec::with_capacity(gts.len());
            for g in gts {
                if g.mask.dims() != p.mask.dims() {
                    return Err(Error::dims(g.mask.dims(), p.mask.dims()));
                }
                if g.class != p.class {
                    row.push(None);
                    continue;
                }
                let inter = g.mask.intersection_area(&p.mask)? as u64;
                let union = (g.mask.area() + p.mask.area()) as u64 - inter;
                row.push(Some((inter, union)));
            }
            overlaps.push(row);
        }
        let mut hits = vec![[false; 10]; order.len()];
        for (t, &pct) in IOU_THRESHOLDS_PCT.iter().enumerate() {
            let mut taken = vec![false; gts.len()];
            for (k, row) in overlaps.iter().enumerate() {
                let mut best: Option<(usize, (u64, u64))> = None;
                for (j, o) in row.iter().enumerate() {
                    let Some((inter, union)) = *o else { continue };
                    if taken[j] || inter * 100 < pct * union {
                        continue;
                    }
                    if best.is_none_or(|(_, b)| iou_cmp((inter, union), b) == Ordering::Greater) {
                        best = Some((j, (inter, union)));
                    }
                }
                if let Some((j, _)) = best {
                    taken[j] = true;
                    hits[k][t] = true;
                }
            }
        }
        for (p, h) in order.iter().zip(hits) {
            self.per_class
                .entry(p.class)
                .or_default()
                .detections
                .push(Detection {
                    score: p.score,
                    image,
                    seq: p.object_seq,
                    hits: h,
                });
        }
        Ok(())
    }

    /// Appends `other` as later images.
    pub fn merge(mut self, other: ApAccumulator) -> ApAccumulator {
        let offset = self.images;
        self.images += other.images;
        for (c, o) in other.per_class {
            let s = self.per_class.entry(c).or_default();
            s.num_gt += o.num_gt;
            s.detections.extend(o.detections.into_iter().map(|mut d| {
                d.image += offset;
                d
            }));
        }
        self
    }

    /// AP per class with at least one ground-truth instance; classes with
    /// detections but no ground truth are left out.
    pub fn finish(&self) -> MetricTable {
        let mut per_class = BTreeMap::new();
        for (&c, k) in &self.per_class {
            if k.num_gt == 0 {
                continue;
            }
            let mut dets: Vec<&Detection> = k.detections.iter().collect();
            dets.sort_by(|a, b| {
                b.score
                    .total_cmp(&a.score)
                    .then(a.image.cmp(&b.image))
                    .then(a.seq.cmp(&b.seq))
            });
            let mut sum = 0.0;
            for t in 0..IOU_THRESHOLDS_PCT.len() {
                let flags: Vec<bool> = dets.iter().map(|d| d.hits[t]).collect();
                sum += average_precision(&flags, k.num_gt);
            }
            per_class.insert(
                c,
                ClassScore {
                    value: sum / IOU_THRESHOLDS_PCT.len() as f64,
                    counts: None,
                },
            );
        }
        let keys: Vec<ClassId> = per_class.keys().copied().collect();
        MetricTable::from_scores(per_class, keys)
    }
}

/// All-point interpolated AP of a ranked list of true/false positives.
pub(crate) fn average_precision(ranked_hits: &[bool], num_gt: u64) -> f64 {
    if num_gt == 0 {
        return 0.0;
    }
    let mut precision = Vec::with_capacity(ranked_hits.len());
    let mut recall = Vec::with_capacity(ranked_hits.len());
    let mut tp = 0u64;
    for (i, &hit) in ranked_hits.iter().enumerate() {
        tp += hit as u64;
        precision.push(tp as f64 / (i + 1) as f64);
        recall.push(tp as f64 / num_gt as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, r) in precision.iter().zip(&recall) {
        ap += (r - prev_recall) * p;
        prev_recall = *r;
    }
    ap
}

/// AP (or AAP when given amodal masks) of a single image.
pub fn compute_ap(preds: &[InstancePrediction], gts: &[GtInstance]) -> Result<MetricTable> {
    let mut acc = ApAccumulator::new();
    acc.accumulate(preds, gts)?;
    Ok(acc.finish())
}
