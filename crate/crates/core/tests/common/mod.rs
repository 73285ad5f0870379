#![allow(dead_code)]

use unlock_core::class::PixelLabel;
use unlock_core::{
    BinaryMask, ClassId, InstancePrediction, LabelMap, SemanticPrediction, SplitMix64,
};

pub fn random_rect(rng: &mut SplitMix64, h: usize, w: usize) -> BinaryMask {
    let y0 = rng.range_inclusive(0, h - 1);
    let x0 = rng.range_inclusive(0, w - 1);
    let y1 = rng.range_inclusive(y0 + 1, h);
    let x1 = rng.range_inclusive(x0 + 1, w);
    BinaryMask::rect(h, w, y0, x0, y1, x1)
}

/// `n` rectangles with random classes from `classes`, scores in [0, 1] and
/// sequence numbers `0..n`.
pub fn random_objects(
    rng: &mut SplitMix64,
    h: usize,
    w: usize,
    n: usize,
    classes: &[ClassId],
) -> Vec<InstancePrediction> {
    (0..n)
        .map(|k| {
            let class = classes[rng.below(classes.len() as u64) as usize];
            let score = (rng.below(21) as f64) / 20.0;
            InstancePrediction::new(class, score, random_rect(rng, h, w), k as u64).unwrap()
        })
        .collect()
}

/// Blocky random label map over `num_classes` classes.
pub fn random_labels(rng: &mut SplitMix64, h: usize, w: usize, num_classes: usize) -> LabelMap {
    let mut map = LabelMap::filled(h, w, PixelLabel::Certain(ClassId(0)));
    for _ in 0..rng.range_inclusive(1, 5) {
        let c = ClassId(rng.below(num_classes as u64) as u8);
        for i in random_rect(rng, h, w).ones() {
            map.set(i, PixelLabel::Certain(c));
        }
    }
    map
}

pub fn random_semantic(
    rng: &mut SplitMix64,
    h: usize,
    w: usize,
    num_classes: usize,
) -> SemanticPrediction {
    let labels = random_labels(rng, h, w, num_classes);
    let softness = 0.5 * rng.next_f64();
    SemanticPrediction::from_label_map(&labels, num_classes, softness).unwrap()
}

pub fn shuffle<T>(rng: &mut SplitMix64, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        items.swap(i, rng.below(i as u64 + 1) as usize);
    }
}
