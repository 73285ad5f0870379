//! Omni pseudo-labeling: thing gating, class-wise self-tuning thresholds,
//! certain/uncertain label generation and the losses that consume them.
//!
//! Thresholds are a two-pass computation. [`collect_image_stats`] runs per
//! image and the results are merged across the dataset; the merged
//! statistics feed [`compute_all_thresholds`], and only then can
//! [`generate_omni_pseudo_label`] run per image.

mod labels;
mod loss;
mod prediction;
mod thresholds;

pub use labels::{
    collect_image_stats, compute_all_thresholds, compute_thing_mask, compute_uncertain_region,
    gate_all, gate_prediction, generate_omni_pseudo_label, generate_semantic_pseudo_label,
    select_certain_objects, semantic_seq, semantic_stats, BranchLabel, BranchParams, BranchStats,
    OmniPseudoLabel, PredictionSet,
};
pub use loss::{masked_cross_entropy, uncertainty_guided_bce, LossOutput, ProbGrid, EPS};
pub use prediction::{
    rank_order, Branch, InstancePrediction, SemanticPrediction, NORMALIZATION_TOLERANCE,
};
pub use thresholds::{
    class_threshold, compute_cs_thresholds, BranchThresholds, ClassThreshold, CsThresholds, Rule,
    ScoreStats, ScoredItem, ThresholdParams,
};
