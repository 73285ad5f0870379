use serde::{Deserialize, Serialize};

use super::pool::ObjectPool;
use crate::class::{LabelMap, PixelLabel};
use crate::error::{Error, Result};
use crate::fusion::match_amodal_to_visible;
use crate::image::Image;
use crate::mask::BinaryMask;
use crate::opll::{InstancePrediction, OmniPseudoLabel};
use crate::rng::SplitMix64;

/// `object_seq` of the k-th paste in a mixed sample is `PASTE_SEQ_BASE + k`.
pub const PASTE_SEQ_BASE: u64 = 1 << 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PasteOutcome {
    Kept,
    RemovedFullyOccluded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PasteRecord {
    pub object: usize,
    pub outcome: PasteOutcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixedSample {
    pub image: Image,
    pub labels: OmniPseudoLabel,
    pub paste_log: Vec<PasteRecord>,
}

/// Pastes `r` pool objects, drawn with `seed`, into the base image at their
/// original coordinates. Later pastes go in front; a paste hidden entirely
/// by later ones is dropped. Base objects whose visible mask ends up fully
/// covered lose their instance label and the paired amodal label.
pub fn spatial_aware_mix(
    image: &Image,
    labels: &OmniPseudoLabel,
    pool: &ObjectPool,
    r: usize,
    seed: u64,
) -> Result<MixedSample> {
    let dims = image.dims();
    if labels.dims() != dims {
        return Err(Error::dims(dims, labels.dims()));
    }
    let picks = SplitMix64::new(seed).sample_indices(pool.len(), r);
    let objects: Vec<_> = picks.iter().map(|&i| &pool.objects()[i]).collect();
    for o in &objects {
        if o.full_mask.dims() != dims {
            return Err(Error::dims(dims, o.full_mask.dims()));
        }
        if o.pixels.channels() != image.channels() {
            return Err(Error::ChannelMismatch {
                expected: image.channels(),
                found: o.pixels.channels(),
            });
        }
    }

    // behind[k]: union of the full masks pasted after k
    let (h, w) = dims;
    let mut behind = vec![BinaryMask::new(h, w); objects.len()];
    for k in (0..objects.len().saturating_sub(1)).rev() {
        behind[k] = behind[k + 1].or(&objects[k + 1].full_mask)?;
    }

    let mut out_image = image.clone();
    let mut semantic: LabelMap = labels.semantic.clone();
    let mut pasted = BinaryMask::new(h, w);
    let mut log = Vec::with_capacity(objects.len());
    let mut new_instances = Vec::new();
    let mut new_amodal = Vec::new();
    for (k, (o, &id)) in objects.iter().zip(&picks).enumerate() {
        let visible = o.full_mask.diff(&behind[k])?;
        if visible.is_empty() {
            log.push(PasteRecord {
                object: id,
                outcome: PasteOutcome::RemovedFullyOccluded,
            });
            continue;
        }
        log.push(PasteRecord {
            object: id,
            outcome: PasteOutcome::Kept,
        });
        for i in o.full_mask.ones() {
            out_image.pixel_mut(i).copy_from_slice(o.source_pixel(i));
            let label = if o.overlap_mask.get_index(i) {
                PixelLabel::Uncertain
            } else {
                PixelLabel::Certain(o.class)
            };
            semantic.set(i, label);
        }
        out_image.zero_masked(&o.overlap_mask)?;
        pasted.or_assign(&o.full_mask)?;
        let seq = PASTE_SEQ_BASE + k as u64;
        new_instances.push(InstancePrediction {
            class: o.class,
            score: o.score,
            mask: visible,
            object_seq: seq,
        });
        new_amodal.push(InstancePrediction {
            class: o.class,
            score: o.score,
            mask: o.full_mask.clone(),
            object_seq: seq,
        });
    }

    let base_inst = &labels.instance.certain;
    let base_amodal = &labels.amodal.certain;
    let pairs = match_amodal_to_visible(
        &base_inst
            .iter()
            .map(|p| (p.class, &p.mask))
            .collect::<Vec<_>>(),
        &base_amodal
            .iter()
            .map(|p| (p.class, &p.mask))
            .collect::<Vec<_>>(),
    )?;
    let mut drop_inst = vec![false; base_inst.len()];
    let mut drop_amodal = vec![false; base_amodal.len()];
    let mut paired = vec![false; base_amodal.len()];
    for (v, p) in base_inst.iter().enumerate() {
        let covered = p.mask.is_subset_of(&pasted)?;
        drop_inst[v] = covered;
        if let Some(a) = pairs[v] {
            paired[a] = true;
            drop_amodal[a] = covered;
        }
    }
    for (a, p) in base_amodal.iter().enumerate() {
        if !paired[a] {
            drop_amodal[a] = p.mask.is_subset_of(&pasted)?;
        }
    }

    let mut out_labels = labels.clone();
    out_labels.semantic = semantic;
    out_labels.instance.certain = keep(base_inst, &drop_inst);
    out_labels.instance.certain.extend(new_instances);
    out_labels.instance.uncertain.diff_assign(&pasted)?;
    out_labels.amodal.certain = keep(base_amodal, &drop_amodal);
    out_labels.amodal.certain.extend(new_amodal);
    out_labels.amodal.uncertain.diff_assign(&pasted)?;
    Ok(MixedSample {
        image: out_image,
        labels: out_labels,
        paste_log: log,
    })
}

fn keep(objects: &[InstancePrediction], drop: &[bool]) -> Vec<InstancePrediction> {
    objects
        .iter()
        .zip(drop)
        .filter(|(_, d)| !**d)
        .map(|(o, _)| o.clone())
        .collect()
}
