//! Shared fixtures for the benchmarks.

use unlock_core::dataset::{GtDataset, PredictionDataset};
use unlock_core::synth::{self, NoiseConfig, SceneConfig};
use unlock_core::{BinaryMask, ClassTable, SplitMix64};

/// Synthetic predictions and ground truth with typical noise.
pub fn synthetic(
    seed: u64,
    count: usize,
    height: usize,
    width: usize,
) -> (PredictionDataset, GtDataset, ClassTable) {
    let classes = synth::default_palette();
    let scene = SceneConfig {
        height,
        width,
        ..SceneConfig::default()
    };
    let samples = synth::generate_dataset(seed, count, &scene, &NoiseConfig::typical(), &classes)
        .expect("valid synthetic config");
    let (preds, gt) = synth::into_datasets(samples, &classes);
    (preds, gt, classes)
}

/// Mask of independent pixels set with probability `density`.
pub fn noise_mask(seed: u64, height: usize, width: usize, density: f64) -> BinaryMask {
    let mut rng = SplitMix64::new(seed);
    BinaryMask::from_fn(height, width, |_, _| rng.chance(density))
}

/// A filled ellipse-like blob, the typical shape of an object mask.
pub fn blob_mask(height: usize, width: usize) -> BinaryMask {
    let (cy, cx) = (height as f64 / 2.0, width as f64 / 2.0);
    BinaryMask::from_fn(height, width, |y, x| {
        let dy = (y as f64 - cy) / cy;
        let dx = (x as f64 - cx) / cx;
        dy * dy + dx * dx <= 0.6
    })
}
