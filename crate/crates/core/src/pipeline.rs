//! Dataset-level stages: statistics, thresholds, pseudo-labels, pool,
//! mixing, fusion and evaluation.
//!
//! Per-image work runs on the rayon pool. Reductions are either
//! order-independent (score statistics) or merged in image order, so
//! results do not depend on the number of workers.

use rayon::prelude::*;
use serde::Serialize;

use crate::adcl::{build_object_pool, image_pool_candidates, spatial_aware_mix, ObjectPool};
use crate::class::ClassTable;
use crate::config::PipelineConfig;
use crate::dataset::{
    FusedDataset, FusedSample, GtDataset, LabelDataset, LabeledSample, PredictionDataset,
};
use crate::error::{Error, Result};
use crate::fusion::fuse_outputs;
use crate::metrics::{Evaluator, MetricReport};
use crate::opll::{
    collect_image_stats, compute_all_thresholds, compute_cs_thresholds, generate_omni_pseudo_label,
    Branch, BranchStats, BranchThresholds, CsThresholds,
};
use crate::rng::SplitMix64;

/// Merged statistics of every image.
pub fn dataset_stats(data: &PredictionDataset) -> Result<BranchStats> {
    let things = data.classes.things();
    data.samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| collect_image_stats(&s.predictions, i as u64, &things))
        .try_reduce(BranchStats::default, |a, b| Ok(a.merge(b)))
}

pub fn compute_thresholds(
    stats: &BranchStats,
    cfg: &PipelineConfig,
    classes: &ClassTable,
) -> Result<CsThresholds> {
    cfg.validate()?;
    compute_all_thresholds(stats, &cfg.branch_params(), classes)
}

/// The strict amodal thresholds used for pool admission.
pub fn strict_thresholds(
    stats: &BranchStats,
    cfg: &PipelineConfig,
    classes: &ClassTable,
) -> Result<BranchThresholds> {
    cfg.validate()?;
    compute_cs_thresholds(Branch::Amodal, &stats.amodal, cfg.strict, classes.things())
}

pub fn pseudo_label_dataset(
    data: &PredictionDataset,
    thresholds: &CsThresholds,
) -> Result<LabelDataset> {
    let things = data.classes.things();
    let samples = data
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(LabeledSample {
                id: s.id.clone(),
                image: s.image.clone(),
                labels: generate_omni_pseudo_label(&s.predictions, i as u64, thresholds, &things)?,
                paste_log: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelDataset {
        classes: data.classes.clone(),
        samples,
    })
}

pub fn build_pool(
    data: &PredictionDataset,
    strict: &BranchThresholds,
    capacity: usize,
) -> Result<ObjectPool> {
    let things = data.classes.things();
    let per_image = data
        .samples
        .par_iter()
        .map(|s| image_pool_candidates(&s.predictions, &s.image, &s.id, strict, &things))
        .collect::<Result<Vec<_>>>()?;
    Ok(build_object_pool(per_image, capacity))
}

/// Mixes every labeled image; image `i` uses the stream derived from
/// `(seed, i)`.
pub fn mix_dataset(
    labels: &LabelDataset,
    pool: &ObjectPool,
    r: usize,
    seed: u64,
) -> Result<LabelDataset> {
    let samples = labels
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mix_seed = SplitMix64::derive(seed, i as u64).next_u64();
            let m = spatial_aware_mix(&s.image, &s.labels, pool, r, mix_seed)?;
            Ok(LabeledSample {
                id: s.id.clone(),
                image: m.image,
                labels: m.labels,
                paste_log: Some(m.paste_log),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelDataset {
        classes: labels.classes.clone(),
        samples,
    })
}

pub fn fuse_dataset(data: &PredictionDataset, confidence_floor: f64) -> Result<FusedDataset> {
    let samples = data
        .samples
        .par_iter()
        .map(|s| {
            let p = &s.predictions;
            Ok(FusedSample {
                id: s.id.clone(),
                outputs: fuse_outputs(&p.semantic, &p.instance, &p.amodal, confidence_floor)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FusedDataset {
        classes: data.classes.clone(),
        samples,
    })
}

/// Scores fused outputs against ground truth matched by image id.
pub fn evaluate(fused: &FusedDataset, gt: &GtDataset) -> Result<MetricReport> {
    if fused.classes != gt.classes {
        return Err(Error::Data(
            "prediction and ground-truth class tables differ".into(),
        ));
    }
    let by_id: std::collections::HashMap<&str, _> =
        gt.samples.iter().map(|s| (s.id.as_str(), &s.gt)).collect();
    let partial = fused
        .samples
        .par_iter()
        .map(|s| {
            let g = by_id
                .get(s.id.as_str())
                .ok_or_else(|| Error::Data(format!("no ground truth for image `{}`", s.id)))?;
            let mut ev = Evaluator::new(&fused.classes);
            ev.add_image(&s.outputs, g)?;
            Ok(ev)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = partial
        .into_iter()
        .reduce(Evaluator::merge)
        .unwrap_or_else(|| Evaluator::new(&fused.classes));
    Ok(total.finish())
}

/// Counts describing one pipeline run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub images: usize,
    pub certain_instances: usize,
    pub certain_amodal: usize,
    pub pool_objects: usize,
    pub pastes_kept: usize,
    pub pastes_removed: usize,
}

#[derive(Clone, Debug)]
pub struct PipelineOutputs {
    pub thresholds: CsThresholds,
    pub strict: BranchThresholds,
    pub labels: LabelDataset,
    pub pool: ObjectPool,
    pub mixed: LabelDataset,
    pub fused: FusedDataset,
    pub report: Option<MetricReport>,
    pub summary: RunSummary,
}

/// All stages in order; evaluation runs when ground truth is given.
pub fn run_pipeline(
    data: &PredictionDataset,
    gt: Option<&GtDataset>,
    cfg: &PipelineConfig,
) -> Result<PipelineOutputs> {
    cfg.validate()?;
    let stats = dataset_stats(data)?;
    let thresholds = compute_thresholds(&stats, cfg, &data.classes)?;
    let strict = strict_thresholds(&stats, cfg, &data.classes)?;
    let labels = pseudo_label_dataset(data, &thresholds)?;
    let pool = build_pool(data, &strict, cfg.pool_capacity)?;
    let mixed = mix_dataset(&labels, &pool, cfg.r, cfg.seed)?;
    let fused = fuse_dataset(data, cfg.confidence_floor)?;
    let report = gt.map(|g| evaluate(&fused, g)).transpose()?;
    let logs = mixed
        .samples
        .iter()
        .flat_map(|s| s.paste_log.iter().flatten());
    let (kept, removed) = logs.fold((0, 0), |(k, r), p| match p.outcome {
        crate::adcl::PasteOutcome::Kept => (k + 1, r),
        crate::adcl::PasteOutcome::RemovedFullyOccluded => (k, r + 1),
    });
    let summary = RunSummary {
        images: data.samples.len(),
        certain_instances: labels
            .samples
            .iter()
            .map(|s| s.labels.instance.certain.len())
            .sum(),
        certain_amodal: labels
            .samples
            .iter()
            .map(|s| s.labels.amodal.certain.len())
            .sum(),
        pool_objects: pool.len(),
        pastes_kept: kept,
        pastes_removed: removed,
    };
    Ok(PipelineOutputs {
        thresholds,
        strict,
        labels,
        pool,
        mixed,
        fused,
        report,
        summary,
    })
}
