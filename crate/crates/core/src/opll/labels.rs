use std::collections::{BTreeSet, HashSet};

use super::prediction::{Branch, InstancePrediction, SemanticPrediction};
use super::thresholds::{
    compute_cs_thresholds, BranchThresholds, CsThresholds, ScoreStats, ThresholdParams,
};
use crate::class::{ClassId, ClassTable, LabelMap, PixelLabel};
use crate::error::{Error, Result};
use crate::mask::BinaryMask;

/// Raw source-model output for one image.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSet {
    pub semantic: SemanticPrediction,
    pub instance: Vec<InstancePrediction>,
    pub amodal: Vec<InstancePrediction>,
}

impl PredictionSet {
    pub fn dims(&self) -> (usize, usize) {
        self.semantic.dims()
    }

    /// Numbers the objects of each instance branch `(image_ordinal << 32) | k`
    /// so that sequence numbers are unique across a dataset.
    pub fn assign_object_seqs(&mut self, image_ordinal: u64) {
        for list in [&mut self.instance, &mut self.amodal] {
            for (k, p) in list.iter_mut().enumerate() {
                p.object_seq = semantic_seq(image_ordinal, k);
            }
        }
    }

    pub fn objects(&self, branch: Branch) -> &[InstancePrediction] {
        match branch {
            Branch::Instance => &self.instance,
            Branch::Amodal => &self.amodal,
            Branch::Semantic => &[],
        }
    }
}

/// Certain objects of one instance-level branch plus the region excluded
/// from its loss.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchLabel {
    pub certain: Vec<InstancePrediction>,
    pub uncertain: BinaryMask,
}

impl BranchLabel {
    pub fn empty(height: usize, width: usize) -> Self {
        BranchLabel {
            certain: Vec::new(),
            uncertain: BinaryMask::new(height, width),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmniPseudoLabel {
    pub semantic: LabelMap,
    pub instance: BranchLabel,
    pub amodal: BranchLabel,
}

impl OmniPseudoLabel {
    pub fn dims(&self) -> (usize, usize) {
        self.semantic.dims()
    }

    pub fn branch(&self, branch: Branch) -> Option<&BranchLabel> {
        match branch {
            Branch::Instance => Some(&self.instance),
            Branch::Amodal => Some(&self.amodal),
            Branch::Semantic => None,
        }
    }
}

/// Pixels whose most probable class is a thing class.
pub fn compute_thing_mask(sem: &SemanticPrediction, things: &BTreeSet<ClassId>) -> BinaryMask {
    debug_assert!(!things.is_empty(), "thing set must not be empty");
    let (h, w) = sem.dims();
    let mut mask = BinaryMask::new(h, w);
    for i in 0..h * w {
        if things.contains(&sem.argmax(i).0) {
            mask.set_index(i, true);
        }
    }
    mask
}

/// Restricts a prediction to thing pixels; `None` when nothing survives.
pub fn gate_prediction(
    pred: &InstancePrediction,
    thing_mask: &BinaryMask,
) -> Result<Option<InstancePrediction>> {
    let mask = pred.mask.and(thing_mask)?;
    if mask.is_empty() {
        return Ok(None);
    }
    Ok(Some(InstancePrediction {
        mask,
        ..pred.clone()
    }))
}

pub fn gate_all(
    preds: &[InstancePrediction],
    thing_mask: &BinaryMask,
) -> Result<Vec<InstancePrediction>> {
    let mut out = Vec::with_capacity(preds.len());
    for p in preds {
        if let Some(g) = gate_prediction(p, thing_mask)? {
            out.push(g);
        }
    }
    Ok(out)
}

pub fn select_certain_objects(
    gated: &[InstancePrediction],
    branch: Branch,
    th: &BranchThresholds,
) -> Result<Vec<InstancePrediction>> {
    th.expect_branch(branch)?;
    Ok(gated
        .iter()
        .filter(|p| th.admits(p.class, p.score, p.object_seq))
        .cloned()
        .collect())
}

/// Union of the non-certain masks minus the union of the certain ones.
/// Certain objects are recognized by `object_seq`.
pub fn compute_uncertain_region(
    height: usize,
    width: usize,
    gated: &[InstancePrediction],
    certain: &[InstancePrediction],
) -> Result<BinaryMask> {
    let certain_seqs: HashSet<u64> = certain.iter().map(|p| p.object_seq).collect();
    let rejected = BinaryMask::union_all(
        height,
        width,
        gated
            .iter()
            .filter(|p| !certain_seqs.contains(&p.object_seq))
            .map(|p| &p.mask),
    )?;
    let covered = BinaryMask::union_all(height, width, certain.iter().map(|p| &p.mask))?;
    rejected.diff(&covered)
}

/// Dataset-wide ordering key for a semantic pixel.
pub fn semantic_seq(image_ordinal: u64, pixel: usize) -> u64 {
    (image_ordinal << 32) | pixel as u64
}

/// Per-pixel `(argmax class, max probability)` statistics of one image.
pub fn semantic_stats(sem: &SemanticPrediction, image_ordinal: u64) -> ScoreStats {
    let mut stats = ScoreStats::new();
    for i in 0..sem.pixels() {
        let (c, p) = sem.argmax(i);
        stats.push(c, p, semantic_seq(image_ordinal, i));
    }
    stats
}

/// Tri-state semantic pseudo-label: certain where the pixel's max
/// probability passes its argmax class's rule, uncertain elsewhere.
pub fn generate_semantic_pseudo_label(
    sem: &SemanticPrediction,
    th: &BranchThresholds,
    image_ordinal: u64,
) -> Result<LabelMap> {
    th.expect_branch(Branch::Semantic)?;
    let (h, w) = sem.dims();
    let codes = (0..h * w)
        .map(|i| {
            let (c, p) = sem.argmax(i);
            if th.admits(c, p, semantic_seq(image_ordinal, i)) {
                PixelLabel::Certain(c).code()
            } else {
                PixelLabel::Uncertain.code()
            }
        })
        .collect();
    Ok(LabelMap::from_codes(h, w, codes))
}

/// Gated statistics of one image, per branch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BranchStats {
    pub semantic: ScoreStats,
    pub instance: ScoreStats,
    pub amodal: ScoreStats,
}

impl BranchStats {
    pub fn merge(self, other: BranchStats) -> BranchStats {
        BranchStats {
            semantic: self.semantic.merge(other.semantic),
            instance: self.instance.merge(other.instance),
            amodal: self.amodal.merge(other.amodal),
        }
    }
}

/// First pass: statistics of the gated predictions of one image.
pub fn collect_image_stats(
    preds: &PredictionSet,
    image_ordinal: u64,
    things: &BTreeSet<ClassId>,
) -> Result<BranchStats> {
    let thing_mask = compute_thing_mask(&preds.semantic, things);
    let mut stats = BranchStats {
        semantic: semantic_stats(&preds.semantic, image_ordinal),
        ..Default::default()
    };
    stats
        .instance
        .extend_predictions(&gate_all(&preds.instance, &thing_mask)?);
    stats
        .amodal
        .extend_predictions(&gate_all(&preds.amodal, &thing_mask)?);
    Ok(stats)
}

/// Per-branch `(fix, per)` parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchParams {
    pub semantic: ThresholdParams,
    pub instance: ThresholdParams,
    pub amodal: ThresholdParams,
}

pub fn compute_all_thresholds(
    stats: &BranchStats,
    params: &BranchParams,
    classes: &ClassTable,
) -> Result<CsThresholds> {
    let things = classes.things();
    Ok(CsThresholds {
        semantic: compute_cs_thresholds(
            Branch::Semantic,
            &stats.semantic,
            params.semantic,
            classes.ids(),
        )?,
        instance: compute_cs_thresholds(
            Branch::Instance,
            &stats.instance,
            params.instance,
            things.iter().copied(),
        )?,
        amodal: compute_cs_thresholds(
            Branch::Amodal,
            &stats.amodal,
            params.amodal,
            things.iter().copied(),
        )?,
    })
}

fn branch_label(
    objects: &[InstancePrediction],
    thing_mask: &BinaryMask,
    branch: Branch,
    th: &BranchThresholds,
) -> Result<BranchLabel> {
    let (h, w) = thing_mask.dims();
    let gated = gate_all(objects, thing_mask)?;
    let certain = select_certain_objects(&gated, branch, th)?;
    let uncertain = compute_uncertain_region(h, w, &gated, &certain)?;
    Ok(BranchLabel { certain, uncertain })
}

/// Second pass: omni pseudo-labels of one image.
pub fn generate_omni_pseudo_label(
    preds: &PredictionSet,
    image_ordinal: u64,
    thresholds: &CsThresholds,
    things: &BTreeSet<ClassId>,
) -> Result<OmniPseudoLabel> {
    let dims = preds.dims();
    for p in preds.instance.iter().chain(&preds.amodal) {
        if p.mask.dims() != dims {
            return Err(Error::dims(dims, p.mask.dims()));
        }
    }
    let thing_mask = compute_thing_mask(&preds.semantic, things);
    Ok(OmniPseudoLabel {
        semantic: generate_semantic_pseudo_label(
            &preds.semantic,
            &thresholds.semantic,
            image_ordinal,
        )?,
        instance: branch_label(
            &preds.instance,
            &thing_mask,
            Branch::Instance,
            &thresholds.instance,
        )?,
        amodal: branch_label(
            &preds.amodal,
            &thing_mask,
            Branch::Amodal,
            &thresholds.amodal,
        )?,
    })
}
