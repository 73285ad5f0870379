use std::collections::BTreeMap;

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use super::{ClassScore, Counts, MetricTable};
use crate::class::{ClassId, ClassTable};
use crate::error::{Error, Result};
use crate::fusion::PanopticMap;
use crate::mask::BinaryMask;

/// Which mask of a thing segment is compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PqMode {
    Visible,
    Amodal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct PqCounts {
    tp: u64,
    fp: u64,
    fn_: u64,
    iou_sum: f64,
}

/// Panoptic quality accumulator.
///
/// Stuff forms one segment per class from the pixels not claimed by any
/// thing segment. Thing segments come from the segment table; thing-class
/// pixels outside every segment form no segment. A pair can match when its
/// IoU is strictly above one half. Disjoint masks then match uniquely;
/// overlapping amodal masks are matched to maximize the number of pairs,
/// then their summed IoU.
#[derive(Clone, Debug)]
pub struct PqAccumulator {
    mode: PqMode,
    classes: ClassTable,
    per_class: BTreeMap<ClassId, PqCounts>,
}

impl PqAccumulator {
    pub fn new(mode: PqMode, classes: ClassTable) -> Self {
        PqAccumulator {
            mode,
            classes,
            per_class: BTreeMap::new(),
        }
    }

    fn segments(&self, map: &PanopticMap) -> BTreeMap<ClassId, Vec<BinaryMask>> {
        let (h, w) = map.dims();
        let mut out: BTreeMap<ClassId, Vec<BinaryMask>> = BTreeMap::new();
        let mut stuff: BTreeMap<ClassId, BinaryMask> = BTreeMap::new();
        for (i, (&id, &code)) in map
            .segment_ids()
            .iter()
            .zip(map.classes().codes())
            .enumerate()
        {
            if id != 0 {
                continue;
            }
            let c = ClassId(code);
            if self.classes.is_stuff(c) {
                stuff
                    .entry(c)
                    .or_insert_with(|| BinaryMask::new(h, w))
                    .set_index(i, true);
            }
        }
        for (c, m) in stuff {
            out.entry(c).or_default().push(m);
        }
        for seg in map.segments() {
            let mask = match self.mode {
                PqMode::Visible => &seg.visible,
                PqMode::Amodal => PanopticMap::amodal_or_visible(seg),
            };
            out.entry(seg.class).or_default().push(mask.clone());
        }
        out
    }

    pub fn accumulate(&mut self, pred: &PanopticMap, gt: &PanopticMap) -> Result<()> {
        if pred.dims() != gt.dims() {
            return Err(Error::dims(gt.dims(), pred.dims()));
        }
        let pred_segs = self.segments(pred);
        let gt_segs = self.segments(gt);
        let empty = Vec::new();
        let mut all: Vec<ClassId> = pred_segs.keys().chain(gt_segs.keys()).copied().collect();
        all.sort();
        all.dedup();
        for c in all {
            let ps = pred_segs.get(&c).unwrap_or(&empty);
            let gs = gt_segs.get(&c).unwrap_or(&empty);
            let matched = match_segments(gs, ps)?;
            let counts = self.per_class.entry(c).or_default();
            let mut pred_used = vec![false; ps.len()];
            for hit in &matched {
                match hit {
                    Some((j, iou)) => {
                        pred_used[*j] = true;
                        counts.tp += 1;
                        counts.iou_sum += iou;
                    }
                    None => counts.fn_ += 1,
                }
            }
            counts.fp += pred_used.iter().filter(|u| !**u).count() as u64;
        }
        Ok(())
    }

    pub fn merge(mut self, other: PqAccumulator) -> PqAccumulator {
        for (c, o) in other.per_class {
            let s = self.per_class.entry(c).or_default();
            s.tp += o.tp;
            s.fp += o.fp;
            s.fn_ += o.fn_;
            s.iou_sum += o.iou_sum;
        }
        self
    }

    /// PQ per class seen in either ground truth or prediction; all of them
    /// enter the mean.
    pub fn finish(&self) -> MetricTable {
        let mut per_class = BTreeMap::new();
        for (&c, k) in &self.per_class {
            let denom = k.tp as f64 + 0.5 * (k.fp + k.fn_) as f64;
            if denom == 0.0 {
                continue;
            }
            per_class.insert(
                c,
                ClassScore {
                    value: k.iou_sum / denom,
                    counts: Some(Counts {
                        tp: k.tp,
                        fp: k.fp,
                        fn_: k.fn_,
                    }),
                },
            );
        }
        let keys: Vec<ClassId> = per_class.keys().copied().collect();
        MetricTable::from_scores(per_class, keys)
    }
}

/// For each ground-truth segment, its matched prediction and their IoU.
fn match_segments(gt: &[BinaryMask], pred: &[BinaryMask]) -> Result<Vec<Option<(usize, f64)>>> {
    let mut valid = vec![vec![None; pred.len()]; gt.len()];
    let mut degree_gt = vec![0; gt.len()];
    let mut degree_pred = vec![0; pred.len()];
    for (i, g) in gt.iter().enumerate() {
        for (j, p) in pred.iter().enumerate() {
            let inter = g.intersection_area(p)?;
            let union = g.area() + p.area() - inter;
            if 2 * inter > union {
                valid[i][j] = Some((inter, union));
                degree_gt[i] += 1;
                degree_pred[j] += 1;
            }
        }
    }
    let iou = |(inter, union): (usize, usize)| inter as f64 / union as f64;
    if degree_gt.iter().chain(&degree_pred).all(|&d| d <= 1) {
        return Ok(valid
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .find_map(|(j, v)| v.map(|v| (j, iou(v))))
            })
            .collect());
    }
    // one unit per pair dominates any IoU sum
    const PAIR: i64 = 1 << 50;
    let weight = |i: usize, j: usize| match valid[i][j] {
        Some((inter, union)) => PAIR + (((inter as u128) << 40) / union as u128) as i64,
        None => 0,
    };
    let transpose = gt.len() > pred.len();
    let matrix = if transpose {
        Matrix::from_fn(pred.len(), gt.len(), |(j, i)| weight(i, j))
    } else {
        Matrix::from_fn(gt.len(), pred.len(), |(i, j)| weight(i, j))
    };
    let (_, assignment) = kuhn_munkres(&matrix);
    let mut out = vec![None; gt.len()];
    for (row, &col) in assignment.iter().enumerate() {
        let (i, j) = if transpose { (col, row) } else { (row, col) };
        if let Some(v) = valid[i][j] {
            out[i] = Some((j, iou(v)));
        }
    }
    Ok(out)
}

/// PQ (or APQ with [`PqMode::Amodal`]) of a single image.
pub fn compute_pq(
    pred: &PanopticMap,
    gt: &PanopticMap,
    mode: PqMode,
    classes: &ClassTable,
) -> Result<MetricTable> {
    let mut acc = PqAccumulator::new(mode, classes.clone());
    acc.accumulate(pred, gt)?;
    Ok(acc.finish())
}
