//! Synthetic scenes with exact amodal ground truth and a noisy stand-in for
//! the source model's predictions.
//!
//! Objects are filled rectangles or ellipses drawn back to front over
//! horizontal stuff bands. Predictions are perturbed copies of the ground
//! truth whose scores follow `clamp(scale_c * IoU + eta, 0, 1)`, with `eta`
//! uniform in `[-score_noise, score_noise)` and `scale_c` a per-class factor
//! (1 unless configured).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::class::{ClassId, ClassKind, ClassTable, LabelMap, PixelLabel};
use crate::dataset::{GtDataset, GtSample, PredictionDataset, PredictionSample};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::mask::BinaryMask;
use crate::metrics::{GroundTruth, GtObject};
use crate::opll::{InstancePrediction, PredictionSet, SemanticPrediction};
use crate::rng::SplitMix64;

pub const SKY: ClassId = ClassId(0);
pub const BUILDING: ClassId = ClassId(1);
pub const ROAD: ClassId = ClassId(2);
pub const CAR: ClassId = ClassId(3);
pub const PERSON: ClassId = ClassId(4);
/// Infrequent thing class, scored low by [`NoiseConfig::rare_class`].
pub const RIDER: ClassId = ClassId(5);

/// Three stuff classes (top to bottom: sky, building, road) and three
/// thing classes.
pub fn default_palette() -> ClassTable {
    ClassTable::from_pairs([
        ("sky", ClassKind::Stuff),
        ("building", ClassKind::Stuff),
        ("road", ClassKind::Stuff),
        ("car", ClassKind::Thing),
        ("person", ClassKind::Thing),
        ("rider", ClassKind::Thing),
    ])
    .expect("static palette")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Rectangle,
    Ellipse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub height: usize,
    pub width: usize,
    pub min_objects: usize,
    pub max_objects: usize,
    pub shapes: Vec<ShapeKind>,
    /// Relative frequency of each thing class.
    pub thing_weights: BTreeMap<ClassId, u32>,
    /// Classes drawn once each in front of the random objects.
    pub guaranteed: Vec<ClassId>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            height: 48,
            width: 96,
            min_objects: 2,
            max_objects: 6,
            shapes: vec![ShapeKind::Rectangle, ShapeKind::Ellipse],
            thing_weights: BTreeMap::from([(CAR, 6), (PERSON, 3), (RIDER, 1)]),
            guaranteed: Vec::new(),
        }
    }
}

impl SceneConfig {
    pub fn validate(&self, classes: &ClassTable) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.height < 8 || self.width < 8 {
            return bad(format!(
                "scene {}x{} is smaller than 8x8",
                self.height, self.width
            ));
        }
        if self.min_objects > self.max_objects {
            return bad(format!(
                "min_objects {} exceeds max_objects {}",
                self.min_objects, self.max_objects
            ));
        }
        if self.shapes.is_empty() {
            return bad("no shape kinds".into());
        }
        if classes.stuff().is_empty() {
            return bad("palette has no stuff class".into());
        }
        let total: u64 = self.thing_weights.values().map(|&w| w as u64).sum();
        if total == 0 && self.max_objects > 0 {
            return bad("thing weights sum to zero".into());
        }
        for c in self.thing_weights.keys().chain(&self.guaranteed) {
            if !classes.is_thing(*c) {
                return bad(format!("class {} is not a thing class", c.0));
            }
        }
        Ok(())
    }
}

/// Ground truth plus the rendered image.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub image: Image,
    pub gt: GroundTruth,
}

fn shape_mask(
    h: usize,
    w: usize,
    kind: ShapeKind,
    y0: usize,
    x0: usize,
    oh: usize,
    ow: usize,
) -> BinaryMask {
    match kind {
        ShapeKind::Rectangle => BinaryMask::rect(h, w, y0, x0, y0 + oh, x0 + ow),
        ShapeKind::Ellipse => {
            let cy = y0 as f64 + oh as f64 / 2.0;
            let cx = x0 as f64 + ow as f64 / 2.0;
            let (ry, rx) = (oh as f64 / 2.0, ow as f64 / 2.0);
            BinaryMask::from_fn(h, w, |y, x| {
                let dy = (y as f64 + 0.5 - cy) / ry;
                let dx = (x as f64 + 0.5 - cx) / rx;
                dy * dy + dx * dx <= 1.0
            })
        }
    }
}

fn weighted_pick(rng: &mut SplitMix64, weights: &BTreeMap<ClassId, u32>) -> ClassId {
    let total: u64 = weights.values().map(|&w| w as u64).sum();
    let mut r = rng.below(total);
    for (&c, &w) in weights {
        if r < w as u64 {
            return c;
        }
        r -= w as u64;
    }
    unreachable!("weights exhausted")
}

fn base_color(class: ClassId) -> [u8; 3] {
    const COLORS: [[u8; 3]; 8] = [
        [70, 130, 180],
        [110, 90, 80],
        [128, 64, 128],
        [200, 40, 40],
        [220, 180, 60],
        [40, 160, 90],
        [150, 150, 230],
        [90, 200, 200],
    ];
    COLORS[class.index() % COLORS.len()]
}

/// Deterministic scene for `seed`; deeper objects come first in
/// `gt.objects` and objects left with no visible pixel are discarded.
pub fn generate_scene(
    seed: u64,
    cfg: &SceneConfig,
    classes: &ClassTable,
) -> Result<SyntheticScene> {
    cfg.validate(classes)?;
    let (h, w) = (cfg.height, cfg.width);
    let mut rng = SplitMix64::new(seed);

    let stuff: Vec<ClassId> = classes.stuff().into_iter().collect();
    let mut bounds = Vec::with_capacity(stuff.len());
    for j in 1..stuff.len() {
        let nominal = j * h / stuff.len();
        let jitter = h / (4 * stuff.len());
        let lo = nominal.saturating_sub(jitter).max(1);
        let hi = (nominal + jitter).min(h - 1).max(lo);
        bounds.push(rng.range_inclusive(lo, hi));
    }
    bounds.sort_unstable();
    let band_of = |y: usize| bounds.iter().filter(|&&b| y >= b).count();

    let n = rng.range_inclusive(cfg.min_objects, cfg.max_objects);
    let mut drawn: Vec<(ClassId, BinaryMask)> = Vec::with_capacity(n + cfg.guaranteed.len());
    let classes_drawn: Vec<ClassId> = (0..n)
        .map(|_| weighted_pick(&mut rng, &cfg.thing_weights))
        .chain(cfg.guaranteed.iter().copied())
        .collect();
    for class in classes_drawn {
        let kind = cfg.shapes[rng.below(cfg.shapes.len() as u64) as usize];
        let oh = rng.range_inclusive((h / 8).max(2), (h / 2).max(2));
        let ow = rng.range_inclusive((w / 8).max(2), (w / 2).max(2));
        let y0 = rng.range_inclusive(0, h - oh);
        let x0 = rng.range_inclusive(0, w - ow);
        drawn.push((class, shape_mask(h, w, kind, y0, x0, oh, ow)));
    }

    let mut cover = BinaryMask::new(h, w);
    let mut visible = vec![BinaryMask::new(h, w); drawn.len()];
    for k in (0..drawn.len()).rev() {
        visible[k] = drawn[k].1.diff(&cover)?;
        cover.or_assign(&drawn[k].1)?;
    }
    let objects: Vec<GtObject> = drawn
        .into_iter()
        .zip(visible)
        .filter(|(_, v)| !v.is_empty())
        .enumerate()
        .map(|(depth, ((class, amodal), visible))| GtObject {
            class,
            visible,
            amodal,
            depth,
        })
        .collect();

    let mut semantic = LabelMap::filled(h, w, PixelLabel::Certain(stuff[0]));
    for i in 0..h * w {
        semantic.set(i, PixelLabel::Certain(stuff[band_of(i / w)]));
    }
    for o in &objects {
        for i in o.visible.ones() {
            semantic.set(i, PixelLabel::Certain(o.class));
        }
    }

    let mut image = Image::new(h, w, 3)?;
    for i in 0..h * w {
        let c = base_color(semantic.class_at(i).expect("labeled"));
        let px = image.pixel_mut(i);
        for ch in 0..3 {
            let texture = ((i * 7 + ch * 13) % 11) as i32 - 5;
            px[ch] = (c[ch] as i32 + texture).clamp(0, 255) as u8;
        }
    }
    for o in &objects {
        let shift = rng.range_inclusive(0, 60) as i32 - 30;
        let c = base_color(o.class);
        for i in o.visible.ones() {
            let px = image.pixel_mut(i);
            for ch in 0..3 {
                px[ch] = (c[ch] as i32 + shift).clamp(0, 255) as u8;
            }
        }
    }
    Ok(SyntheticScene {
        image,
        gt: GroundTruth { semantic, objects },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Erosion radius applied to every predicted mask, before dilation.
    pub erosion: usize,
    pub dilation: usize,
    pub score_noise: f64,
    /// Chance, per ground-truth object, of an extra object at random.
    pub spurious_rate: f64,
    pub miss_rate: f64,
    /// Chance that a pixel's semantic label is replaced by a random class.
    pub semantic_flip: f64,
    /// Probability mass spread over the non-labeled classes.
    pub softness: f64,
    pub class_scale: BTreeMap<ClassId, f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::zero()
    }
}

impl NoiseConfig {
    pub fn zero() -> Self {
        NoiseConfig {
            erosion: 0,
            dilation: 0,
            score_noise: 0.0,
            spurious_rate: 0.0,
            miss_rate: 0.0,
            semantic_flip: 0.0,
            softness: 0.0,
            class_scale: BTreeMap::new(),
        }
    }

    /// Moderate noise on every channel.
    pub fn typical() -> Self {
        NoiseConfig {
            erosion: 1,
            dilation: 0,
            score_noise: 0.15,
            spurious_rate: 0.2,
            miss_rate: 0.1,
            semantic_flip: 0.02,
            softness: 0.3,
            class_scale: BTreeMap::new(),
        }
    }

    /// Scores of `class` scaled by 0.25 with noise 0.04, so they stay below
    /// 0.3 and no fixed cutoff at or above it admits them.
    pub fn rare_class(class: ClassId) -> Self {
        NoiseConfig {
            score_noise: 0.04,
            class_scale: BTreeMap::from([(class, 0.25)]),
            ..NoiseConfig::zero()
        }
    }

    pub fn validate(&self, num_classes: usize) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::ConfigInvalid(format!(
                    "{name} = {v} is outside [0, 1]"
                )))
            }
        };
        unit("spurious_rate", self.spurious_rate)?;
        unit("miss_rate", self.miss_rate)?;
        unit("semantic_flip", self.semantic_flip)?;
        unit("score_noise", self.score_noise)?;
        for (c, s) in &self.class_scale {
            unit(&format!("class_scale[{}]", c.0), *s)?;
        }
        // the labeled class must stay the argmax
        let rest = if num_classes > 1 {
            self.softness / (num_classes - 1) as f64
        } else {
            0.0
        };
        if !(0.0..1.0).contains(&self.softness) || 1.0 - self.softness <= rest {
            return Err(Error::ConfigInvalid(format!(
                "softness {} does not keep the labeled class most probable",
                self.softness
            )));
        }
        Ok(())
    }
}

fn perturb(mask: &BinaryMask, noise: &NoiseConfig) -> BinaryMask {
    mask.erode(noise.erosion).dilate(noise.dilation)
}

fn score(rng: &mut SplitMix64, noise: &NoiseConfig, class: ClassId, iou: f64) -> f64 {
    let scale = noise.class_scale.get(&class).copied().unwrap_or(1.0);
    (scale * iou + rng.symmetric(noise.score_noise)).clamp(0.0, 1.0)
}

/// Predictions of a simulated source model for one scene. Object sequence
/// numbers are the per-branch list positions.
pub fn simulate_predictions(
    scene: &SyntheticScene,
    classes: &ClassTable,
    noise: &NoiseConfig,
    seed: u64,
) -> Result<PredictionSet> {
    let c = classes.len();
    noise.validate(c)?;
    let mut rng = SplitMix64::new(seed);
    let (h, w) = scene.gt.semantic.dims();

    let mut labels = scene.gt.semantic.clone();
    for i in 0..h * w {
        if rng.chance(noise.semantic_flip) {
            labels.set(i, PixelLabel::Certain(ClassId(rng.below(c as u64) as u8)));
        }
    }
    let semantic = SemanticPrediction::from_label_map(&labels, c, noise.softness)?;

    let mut instance = Vec::new();
    let mut amodal = Vec::new();
    for o in &scene.gt.objects {
        if rng.chance(noise.miss_rate) {
            continue;
        }
        for (gt_mask, out) in [(&o.visible, &mut instance), (&o.amodal, &mut amodal)] {
            let mask = perturb(gt_mask, noise);
            if mask.is_empty() {
                continue;
            }
            let s = score(&mut rng, noise, o.class, mask.iou(gt_mask)?);
            out.push(InstancePrediction {
                class: o.class,
                score: s,
                mask,
                object_seq: 0,
            });
        }
    }

    let things: Vec<ClassId> = classes.things().into_iter().collect();
    if !things.is_empty() {
        for _ in 0..scene.gt.objects.len() {
            if !rng.chance(noise.spurious_rate) {
                continue;
            }
            let class = things[rng.below(things.len() as u64) as usize];
            let oh = rng.range_inclusive(2, (h / 4).max(2));
            let ow = rng.range_inclusive(2, (w / 4).max(2));
            let y0 = rng.range_inclusive(0, h - oh);
            let x0 = rng.range_inclusive(0, w - ow);
            let mask = BinaryMask::rect(h, w, y0, x0, y0 + oh, x0 + ow);
            for amodal_branch in [false, true] {
                let mut best = 0.0f64;
                for o in scene.gt.objects.iter().filter(|o| o.class == class) {
                    let target = if amodal_branch { &o.amodal } else { &o.visible };
                    best = best.max(mask.iou(target)?);
                }
                let s = score(&mut rng, noise, class, best);
                let out = if amodal_branch {
                    &mut amodal
                } else {
                    &mut instance
                };
                out.push(InstancePrediction {
                    class,
                    score: s,
                    mask: mask.clone(),
                    object_seq: 0,
                });
            }
        }
    }

    let mut preds = PredictionSet {
        semantic,
        instance,
        amodal,
    };
    preds.assign_object_seqs(0);
    Ok(preds)
}

/// One generated dataset item.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSample {
    pub id: String,
    pub scene: SyntheticScene,
    pub predictions: PredictionSet,
}

/// `count` samples; sample `i` draws from streams derived from `(seed, i)`
/// and its predictions are numbered with image ordinal `i`.
pub fn generate_dataset(
    seed: u64,
    count: usize,
    scene_cfg: &SceneConfig,
    noise: &NoiseConfig,
    classes: &ClassTable,
) -> Result<Vec<SyntheticSample>> {
    (0..count)
        .map(|i| {
            let mut streams = SplitMix64::derive(seed, i as u64);
            let scene = generate_scene(streams.next_u64(), scene_cfg, classes)?;
            let mut predictions = simulate_predictions(&scene, classes, noise, streams.next_u64())?;
            predictions.assign_object_seqs(i as u64);
            Ok(SyntheticSample {
                id: format!("img{i:05}"),
                scene,
                predictions,
            })
        })
        .collect()
}

/// Splits generated samples into a prediction dataset and its ground truth.
pub fn into_datasets(
    samples: Vec<SyntheticSample>,
    classes: &ClassTable,
) -> (PredictionDataset, GtDataset) {
    let mut preds = Vec::with_capacity(samples.len());
    let mut gts = Vec::with_capacity(samples.len());
    for s in samples {
        preds.push(PredictionSample {
            id: s.id.clone(),
            image: s.scene.image,
            predictions: s.predictions,
        });
        gts.push(GtSample {
            id: s.id,
            gt: s.scene.gt,
        });
    }
    (
        PredictionDataset {
            classes: classes.clone(),
            samples: preds,
        },
        GtDataset {
            classes: classes.clone(),
            samples: gts,
        },
    )
}
