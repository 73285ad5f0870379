//! Network-free source-free adaptation machinery for occlusion-aware
//! panoramic segmentation.
//!
//! The crate turns raw source-model predictions (semantic probabilities plus
//! visible and amodal instance lists) into omni pseudo-labels, builds an
//! amodal object pool and mixes pooled objects back into images, fuses branch
//! outputs into panoptic maps and scores everything with mIoU, PQ, APQ, AP and
//! AAP. A synthetic scene generator with exact amodal ground truth drives the
//! end-to-end tests.

pub mod adcl;
pub mod class;
pub mod codec;
pub mod config;
pub mod dataset;
pub mod error;
pub mod fusion;
pub mod image;
pub mod mask;
pub mod metrics;
pub mod opll;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use adcl::{ObjectPool, PoolObject};
pub use class::{ClassId, ClassKind, ClassTable, LabelMap, PixelLabel};
pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use fusion::{FusedOutputs, PanopticMap, Segment};
pub use image::Image;
pub use mask::{rle_decode, rle_encode, BinaryMask, MaskOp, RunSequence};
pub use metrics::{GroundTruth, MetricReport};
pub use opll::{
    Branch, BranchThresholds, CsThresholds, InstancePrediction, OmniPseudoLabel, PredictionSet,
    SemanticPrediction, ThresholdParams,
};
pub use rng::SplitMix64;
