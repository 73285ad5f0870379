//! Occlusion-aware fusion of the three branch outputs into semantic,
//! instance, amodal-instance, panoptic and amodal-panoptic products.
//!
//! Panoptic painting follows the usual score-ordered convention: instances
//! are painted from the highest score down, each claiming only unclaimed
//! pixels, and an instance left with no pixels is dropped. Remaining pixels
//! take the semantic argmax. Thing pixels outside every instance keep their
//! class but get no segment.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::class::{ClassId, LabelMap, PixelLabel};
use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::opll::{rank_order, InstancePrediction, SemanticPrediction};

pub const DEFAULT_CONFIDENCE_FLOOR: f64 = 0.5;

/// Segment id meaning "no segment".
pub const NO_SEGMENT: u32 = 0;

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub id: u32,
    pub class: ClassId,
    pub score: f64,
    pub visible: BinaryMask,
    pub amodal: Option<BinaryMask>,
}

/// Per-pixel class and segment id plus the segment table.
#[derive(Clone, Debug, PartialEq)]
pub struct PanopticMap {
    classes: LabelMap,
    segment_ids: Vec<u32>,
    segments: Vec<Segment>,
}

impl PanopticMap {
    /// Builds the id grid from the segments and checks that they are
    /// disjoint, non-empty, carry unique non-zero ids, agree with the class
    /// map and (when present) lie inside their amodal masks.
    pub fn new(classes: LabelMap, segments: Vec<Segment>) -> Result<Self> {
        let (h, w) = classes.dims();
        let mut segment_ids = vec![NO_SEGMENT; h * w];
        for seg in &segments {
            if seg.visible.dims() != (h, w) {
                return Err(Error::dims((h, w), seg.visible.dims()));
            }
            if seg.id == NO_SEGMENT || seg.visible.is_empty() {
                return Err(Error::ConfigInvalid(format!(
                    "segment {} must have a non-zero id and pixels",
                    seg.id
                )));
            }
            if let Some(amodal) = &seg.amodal {
                if !seg.visible.is_subset_of(amodal)? {
                    return Err(Error::ConfigInvalid(format!(
                        "segment {} visible mask escapes its amodal mask",
                        seg.id
                    )));
                }
            }
            for i in seg.visible.ones() {
                if segment_ids[i] != NO_SEGMENT {
                    return Err(Error::ConfigInvalid(format!(
                        "segments {} and {} overlap",
                        segment_ids[i], seg.id
                    )));
                }
                if classes.class_at(i) != Some(seg.class) {
                    return Err(Error::ConfigInvalid(format!(
                        "segment {} disagrees with the class map at pixel {i}",
                        seg.id
                    )));
                }
                segment_ids[i] = seg.id;
            }
        }
        let mut ids: Vec<u32> = segments.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::ConfigInvalid("duplicate segment id".into()));
        }
        Ok(PanopticMap {
            classes,
            segment_ids,
            segments,
        })
    }

    /// Rebuilds a map from an id grid and a segment table without masks.
    pub fn from_id_grid(
        classes: LabelMap,
        segment_ids: &[u32],
        table: impl IntoIterator<Item = (u32, ClassId, f64, Option<BinaryMask>)>,
    ) -> Result<Self> {
        let (h, w) = classes.dims();
        if segment_ids.len() != h * w {
            return Err(Error::ConfigInvalid(format!(
                "segment grid has {} cells, class map {}",
                segment_ids.len(),
                h * w
            )));
        }
        let segments = table
            .into_iter()
            .map(|(id, class, score, amodal)| {
                let visible = BinaryMask::from_fn(h, w, |y, x| segment_ids[y * w + x] == id);
                Segment {
                    id,
                    class,
                    score,
                    visible,
                    amodal,
                }
            })
            .collect::<Vec<_>>();
        let known: std::collections::HashSet<u32> = segments.iter().map(|s| s.id).collect();
        if let Some(stray) = segment_ids
            .iter()
            .find(|&&id| id != NO_SEGMENT && !known.contains(&id))
        {
            return Err(Error::ConfigInvalid(format!(
                "segment id {stray} missing from the table"
            )));
        }
        PanopticMap::new(classes, segments)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.classes.dims()
    }

    pub fn classes(&self) -> &LabelMap {
        &self.classes
    }

    pub fn segment_ids(&self) -> &[u32] {
        &self.segment_ids
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn has_amodal(&self) -> bool {
        self.segments.iter().all(|s| s.amodal.is_some())
    }

    /// Amodal mask of a segment, falling back to the visible mask.
    pub fn amodal_or_visible(seg: &Segment) -> &BinaryMask {
        seg.amodal.as_ref().unwrap_or(&seg.visible)
    }
}

/// The five fused products for one image.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedOutputs {
    pub semantic: LabelMap,
    pub instances: Vec<InstancePrediction>,
    pub amodal_instances: Vec<InstancePrediction>,
    pub panoptic: PanopticMap,
    pub amodal_panoptic: PanopticMap,
}

/// Pairs amodal objects with visible segments by maximum total overlap
/// among same-class pairs. Returns, for each visible entry, the index of
/// its amodal partner. Pairs with zero overlap are left unmatched.
pub fn match_amodal_to_visible(
    visible: &[(ClassId, &BinaryMask)],
    amodal: &[(ClassId, &BinaryMask)],
) -> Result<Vec<Option<usize>>> {
    let mut out = vec![None; visible.len()];
    if visible.is_empty() || amodal.is_empty() {
        return Ok(out);
    }
    let mut weights = vec![vec![0i64; amodal.len()]; visible.len()];
    for (v, (vc, vm)) in visible.iter().enumerate() {
        for (a, (ac, am)) in amodal.iter().enumerate() {
            if vc == ac {
                weights[v][a] = vm.intersection_area(am)? as i64;
            }
        }
    }
    let transpose = visible.len() > amodal.len();
    let matrix = if transpose {
        Matrix::from_fn(amodal.len(), visible.len(), |(a, v)| weights[v][a])
    } else {
        Matrix::from_fn(visible.len(), amodal.len(), |(v, a)| weights[v][a])
    };
    let (_, assignment) = kuhn_munkres(&matrix);
    for (row, &col) in assignment.iter().enumerate() {
        let (v, a) = if transpose { (col, row) } else { (row, col) };
        if weights[v][a] > 0 {
            out[v] = Some(a);
        }
    }
    Ok(out)
}

pub fn fuse_outputs(
    sem: &SemanticPrediction,
    instances: &[InstancePrediction],
    amodal: &[InstancePrediction],
    confidence_floor: f64,
) -> Result<FusedOutputs> {
    if !(0.0..=1.0).contains(&confidence_floor) {
        return Err(Error::ConfigInvalid(format!(
            "confidence floor {confidence_floor} outside [0, 1]"
        )));
    }
    let dims = sem.dims();
    for p in instances.iter().chain(amodal) {
        if p.mask.dims() != dims {
            return Err(Error::dims(dims, p.mask.dims()));
        }
    }
    let kept: Vec<InstancePrediction> = instances
        .iter()
        .filter(|p| p.score >= confidence_floor)
        .cloned()
        .collect();
    let kept_amodal: Vec<InstancePrediction> = amodal
        .iter()
        .filter(|p| p.score >= confidence_floor)
        .cloned()
        .collect();

    let mut order: Vec<&InstancePrediction> = kept.iter().collect();
    order.sort_by(|a, b| rank_order(a, b));

    let mut classes = sem.argmax_map();
    let (h, w) = dims;
    let mut claimed = BinaryMask::new(h, w);
    let mut segments = Vec::new();
    for p in order {
        let visible = p.mask.diff(&claimed)?;
        if visible.is_empty() {
            continue;
        }
        claimed.or_assign(&visible)?;
        for i in visible.ones() {
            classes.set(i, PixelLabel::Certain(p.class));
        }
        segments.push(Segment {
            id: segments.len() as u32 + 1,
            class: p.class,
            score: p.score,
            visible,
            amodal: None,
        });
    }

    let visible_keys: Vec<(ClassId, &BinaryMask)> =
        segments.iter().map(|s| (s.class, &s.visible)).collect();
    let amodal_keys: Vec<(ClassId, &BinaryMask)> =
        kept_amodal.iter().map(|p| (p.class, &p.mask)).collect();
    let pairing = match_amodal_to_visible(&visible_keys, &amodal_keys)?;
    let mut amodal_segments = segments.clone();
    for (seg, partner) in amodal_segments.iter_mut().zip(pairing) {
        let full = match partner {
            Some(a) => kept_amodal[a].mask.or(&seg.visible)?,
            None => seg.visible.clone(),
        };
        seg.amodal = Some(full);
    }

    let panoptic = PanopticMap::new(classes.clone(), segments)?;
    let amodal_panoptic = PanopticMap::new(classes.clone(), amodal_segments)?;
    Ok(FusedOutputs {
        semantic: classes,
        instances: kept,
        amodal_instances: kept_amodal,
        panoptic,
        amodal_panoptic,
    })
}
