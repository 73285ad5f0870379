use std::collections::{BTreeMap, BTreeSet};

use crate::class::ClassId;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::mask::BinaryMask;
use crate::opll::{
    compute_thing_mask, gate_all, select_certain_objects, Branch, BranchThresholds,
    InstancePrediction, PredictionSet,
};

pub const DEFAULT_POOL_CAPACITY: usize = 2048;

/// An admitted amodal object. `pixels` is the source image cropped to the
/// bounding box of `full_mask`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolObject {
    pub class: ClassId,
    pub score: f64,
    pub full_mask: BinaryMask,
    pub overlap_mask: BinaryMask,
    pub pixels: Image,
    pub source_image_id: String,
}

impl PoolObject {
    /// Checks the stored invariants; used when loading a pool from disk.
    pub fn new(
        class: ClassId,
        score: f64,
        full_mask: BinaryMask,
        overlap_mask: BinaryMask,
        pixels: Image,
        source_image_id: String,
    ) -> Result<Self> {
        if overlap_mask.dims() != full_mask.dims() {
            return Err(Error::dims(full_mask.dims(), overlap_mask.dims()));
        }
        let Some((y0, x0, y1, x1)) = full_mask.bbox() else {
            return Err(Error::ConfigInvalid(
                "pool object with empty full mask".into(),
            ));
        };
        if pixels.dims() != (y1 - y0, x1 - x0) {
            return Err(Error::dims((y1 - y0, x1 - x0), pixels.dims()));
        }
        if !overlap_mask.is_subset_of(&full_mask)? {
            return Err(Error::ConfigInvalid(
                "overlap mask leaves the full mask".into(),
            ));
        }
        if 2 * overlap_mask.area() >= full_mask.area() {
            return Err(Error::ConfigInvalid(format!(
                "overlap area {} is not below half of full area {}",
                overlap_mask.area(),
                full_mask.area()
            )));
        }
        Ok(PoolObject {
            class,
            score,
            full_mask,
            overlap_mask,
            pixels,
            source_image_id,
        })
    }

    /// Top-left corner of the pixel crop in image coordinates.
    pub fn origin(&self) -> (usize, usize) {
        let (y0, x0, _, _) = self.full_mask.bbox().expect("non-empty full mask");
        (y0, x0)
    }

    /// Source sample of image pixel `i`, which must lie in the crop.
    pub fn source_pixel(&self, i: usize) -> &[u8] {
        let w = self.full_mask.width();
        let (y0, x0) = self.origin();
        let (y, x) = (i / w, i % w);
        self.pixels.pixel((y - y0) * self.pixels.width() + (x - x0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Admission {
    Admitted(PoolObject),
    Rejected {
        full_area: usize,
        overlap_area: usize,
    },
}

/// Records the overlap of `candidate` with every other object of the same
/// image and admits it when that overlap covers less than half of it.
pub fn admit_object<'a>(
    candidate: &InstancePrediction,
    others: impl IntoIterator<Item = &'a BinaryMask>,
    image: &Image,
    source_image_id: &str,
) -> Result<Admission> {
    let full = &candidate.mask;
    let (h, w) = full.dims();
    if image.dims() != (h, w) {
        return Err(Error::dims((h, w), image.dims()));
    }
    let others = BinaryMask::union_all(h, w, others)?;
    let overlap = full.and(&others)?;
    let (full_area, overlap_area) = (full.area(), overlap.area());
    if full_area == 0 || 2 * overlap_area >= full_area {
        return Ok(Admission::Rejected {
            full_area,
            overlap_area,
        });
    }
    let (y0, x0, y1, x1) = full.bbox().expect("non-empty");
    Ok(Admission::Admitted(PoolObject {
        class: candidate.class,
        score: candidate.score,
        full_mask: full.clone(),
        overlap_mask: overlap,
        pixels: image.crop(y0, x0, y1, x1),
        source_image_id: source_image_id.to_string(),
    }))
}

/// Admitted objects of one image, in prediction order. Candidates are the
/// gated amodal predictions passing `strict`; overlaps are measured against
/// every other gated amodal prediction of the image.
pub fn image_pool_candidates(
    preds: &PredictionSet,
    image: &Image,
    source_image_id: &str,
    strict: &BranchThresholds,
    things: &BTreeSet<ClassId>,
) -> Result<Vec<PoolObject>> {
    let thing_mask = compute_thing_mask(&preds.semantic, things);
    let gated = gate_all(&preds.amodal, &thing_mask)?;
    let certain = select_certain_objects(&gated, Branch::Amodal, strict)?;
    let mut out = Vec::new();
    for c in &certain {
        let others = gated
            .iter()
            .filter(|g| g.object_seq != c.object_seq)
            .map(|g| &g.mask);
        if let Admission::Admitted(obj) = admit_object(c, others, image, source_image_id)? {
            out.push(obj);
        }
    }
    Ok(out)
}

/// Immutable buffer of pool objects; an object's id is its index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObjectPool {
    objects: Vec<PoolObject>,
}

impl ObjectPool {
    pub fn new(objects: Vec<PoolObject>) -> Self {
        ObjectPool { objects }
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&PoolObject> {
        self.objects.get(id)
    }

    pub fn objects(&self) -> &[PoolObject] {
        &self.objects
    }

    pub fn class_histogram(&self) -> BTreeMap<ClassId, usize> {
        let mut hist = BTreeMap::new();
        for o in &self.objects {
            *hist.entry(o.class).or_insert(0) += 1;
        }
        hist
    }
}

/// Concatenates per-image admission lists in dataset order and keeps the
/// `capacity` highest-score objects (earlier objects win ties), preserving
/// dataset order among the survivors.
pub fn build_object_pool(
    per_image: impl IntoIterator<Item = Vec<PoolObject>>,
    capacity: usize,
) -> ObjectPool {
    let all: Vec<PoolObject> = per_image.into_iter().flatten().collect();
    if all.len() <= capacity {
        return ObjectPool::new(all);
    }
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.sort_by(|&a, &b| all[b].score.total_cmp(&all[a].score).then(a.cmp(&b)));
    let keep: BTreeSet<usize> = order.into_iter().take(capacity).collect();
    ObjectPool::new(
        all.into_iter()
            .enumerate()
            .filter(|(i, _)| keep.contains(i))
            .map(|(_, o)| o)
            .collect(),
    )
}
