//! Evaluation: mIoU, PQ/APQ and AP/AAP.
//!
//! Every metric is an accumulator fed image by image and reduced at the
//! end; per-image partial accumulators merge associatively. All values are
//! fractions in `[0, 1]`; presentation code multiplies by 100.

mod ap;
mod panoptic;
mod semantic;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use ap::{compute_ap, ApAccumulator, GtInstance, IOU_THRESHOLDS_PCT};
pub use panoptic::{compute_pq, PqAccumulator, PqMode};
pub use semantic::{compute_miou, ConfusionCounts};

use crate::class::{ClassId, ClassTable, LabelMap};
use crate::error::Result;
use crate::fusion::{FusedOutputs, PanopticMap, Segment};
use crate::mask::BinaryMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Counts>,
}

/// Per-class values of one metric and their mean over the evaluated
/// classes. `mean` is `None` when no class qualified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub mean: Option<f64>,
    pub per_class: BTreeMap<ClassId, ClassScore>,
}

impl MetricTable {
    pub(crate) fn from_scores(
        per_class: BTreeMap<ClassId, ClassScore>,
        averaged: impl IntoIterator<Item = ClassId>,
    ) -> Self {
        let values: Vec<f64> = averaged
            .into_iter()
            .filter_map(|c| per_class.get(&c).map(|s| s.value))
            .collect();
        let mean = if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        };
        MetricTable { mean, per_class }
    }

    pub fn value(&self, class: ClassId) -> Option<f64> {
        self.per_class.get(&class).map(|s| s.value)
    }
}

/// The five headline metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(rename = "mIoU")]
    pub miou: Option<MetricTable>,
    #[serde(rename = "mPQ")]
    pub mpq: Option<MetricTable>,
    #[serde(rename = "mAPQ")]
    pub mapq: Option<MetricTable>,
    #[serde(rename = "mAP")]
    pub map: Option<MetricTable>,
    #[serde(rename = "mAAP")]
    pub maap: Option<MetricTable>,
}

impl MetricReport {
    /// `(name, mean)` for each computed metric, in display order.
    pub fn means(&self) -> Vec<(&'static str, Option<f64>)> {
        [
            ("mAPQ", &self.mapq),
            ("mPQ", &self.mpq),
            ("mIoU", &self.miou),
            ("mAAP", &self.maap),
            ("mAP", &self.map),
        ]
        .into_iter()
        .filter_map(|(name, t)| t.as_ref().map(|t| (name, t.mean)))
        .collect()
    }

    /// Fixed-width table in percent, one row per class plus a mean row.
    pub fn render_table(&self, classes: &ClassTable) -> String {
        let cols: Vec<(&str, &Option<MetricTable>)> = vec![
            ("APQ", &self.mapq),
            ("PQ", &self.mpq),
            ("IoU", &self.miou),
            ("AAP", &self.maap),
            ("AP", &self.map),
        ]
        .into_iter()
        .filter(|(_, t)| t.is_some())
        .collect();
        let fmt =
            |v: Option<f64>| v.map_or("     -".to_string(), |v| format!("{:>6.1}", v * 100.0));
        let mut out = format!("{:<16}", "class");
        for (name, _) in &cols {
            out.push_str(&format!("{name:>7}"));
        }
        out.push('\n');
        for (id, info) in classes.iter() {
            let row: Vec<Option<f64>> = cols
                .iter()
                .map(|(_, t)| t.as_ref().and_then(|t| t.value(id)))
                .collect();
            if row.iter().all(Option::is_none) {
                continue;
            }
            out.push_str(&format!("{:<16}", info.name));
            for v in row {
                out.push_str(&format!(" {}", fmt(v)));
            }
            out.push('\n');
        }
        out.push_str(&format!("{:<16}", "mean"));
        for (_, t) in &cols {
            out.push_str(&format!(" {}", fmt(t.as_ref().and_then(|t| t.mean))));
        }
        out.push('\n');
        out
    }
}

/// Ground truth for one image.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub semantic: LabelMap,
    pub objects: Vec<GtObject>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GtObject {
    pub class: ClassId,
    pub visible: BinaryMask,
    pub amodal: BinaryMask,
    /// 0 is the deepest object.
    pub depth: usize,
}

impl GroundTruth {
    /// Panoptic map with one segment per object, amodal masks attached.
    pub fn panoptic(&self) -> Result<PanopticMap> {
        let segments = self
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| Segment {
                id: i as u32 + 1,
                class: o.class,
                score: 1.0,
                visible: o.visible.clone(),
                amodal: Some(o.amodal.clone()),
            })
            .collect();
        PanopticMap::new(self.semantic.clone(), segments)
    }

    pub fn visible_instances(&self) -> Vec<GtInstance> {
        self.objects
            .iter()
            .map(|o| GtInstance {
                class: o.class,
                mask: o.visible.clone(),
            })
            .collect()
    }

    pub fn amodal_instances(&self) -> Vec<GtInstance> {
        self.objects
            .iter()
            .map(|o| GtInstance {
                class: o.class,
                mask: o.amodal.clone(),
            })
            .collect()
    }
}

/// Accumulates all five metrics over a dataset.
#[derive(Clone, Debug)]
pub struct Evaluator {
    semantic: ConfusionCounts,
    pq: PqAccumulator,
    apq: PqAccumulator,
    ap: ApAccumulator,
    aap: ApAccumulator,
}

impl Evaluator {
    pub fn new(classes: &ClassTable) -> Self {
        Evaluator {
            semantic: ConfusionCounts::new(classes.len()),
            pq: PqAccumulator::new(PqMode::Visible, classes.clone()),
            apq: PqAccumulator::new(PqMode::Amodal, classes.clone()),
            ap: ApAccumulator::new(),
            aap: ApAccumulator::new(),
        }
    }

    pub fn add_image(&mut self, fused: &FusedOutputs, gt: &GroundTruth) -> Result<()> {
        let gt_panoptic = gt.panoptic()?;
        self.semantic.accumulate(&fused.semantic, &gt.semantic)?;
        self.pq.accumulate(&fused.panoptic, &gt_panoptic)?;
        self.apq.accumulate(&fused.amodal_panoptic, &gt_panoptic)?;
        self.ap
            .accumulate(&fused.instances, &gt.visible_instances())?;
        self.aap
            .accumulate(&fused.amodal_instances, &gt.amodal_instances())?;
        Ok(())
    }

    pub fn merge(self, other: Evaluator) -> Evaluator {
        Evaluator {
            semantic: self.semantic.merge(other.semantic),
            pq: self.pq.merge(other.pq),
            apq: self.apq.merge(other.apq),
            ap: self.ap.merge(other.ap),
            aap: self.aap.merge(other.aap),
        }
    }

    pub fn finish(&self) -> MetricReport {
        MetricReport {
            miou: Some(self.semantic.finish()),
            mpq: Some(self.pq.finish()),
            mapq: Some(self.apq.finish()),
            map: Some(self.ap.finish()),
            maap: Some(self.aap.finish()),
        }
    }
}
