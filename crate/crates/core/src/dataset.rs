//! JSON manifests tying per-image binary files together.
//!
//! Every file reference in a manifest is relative to the manifest's
//! directory. Loading errors name the manifest and the offending field;
//! errors inside referenced files name that file.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::adcl::{ObjectPool, PasteRecord, PoolObject};
use crate::class::{ClassId, ClassTable, LabelMap};
use crate::codec;
use crate::error::{Error, Result};
use crate::fusion::{FusedOutputs, PanopticMap};
use crate::image::Image;
use crate::mask::BinaryMask;
use crate::metrics::{GroundTruth, GtObject};
use crate::opll::{semantic_seq, BranchLabel, InstancePrediction, OmniPseudoLabel, PredictionSet};

pub const PREDICTIONS_MANIFEST: &str = "predictions.json";
pub const GT_MANIFEST: &str = "gt.json";
pub const LABELS_MANIFEST: &str = "labels.json";
pub const POOL_INDEX: &str = "index.json";
pub const FUSED_MANIFEST: &str = "fused.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectEntry {
    class: ClassId,
    score: f64,
    mask_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seq: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionEntry {
    id: String,
    image: String,
    semantic: String,
    instance: Vec<ObjectEntry>,
    amodal: Vec<ObjectEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionManifest {
    classes: ClassTable,
    images: Vec<PredictionEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GtObjectEntry {
    class: ClassId,
    visible_mask_file: String,
    amodal_mask_file: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GtEntry {
    id: String,
    semantic: String,
    /// Deepest first.
    objects: Vec<GtObjectEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GtManifest {
    classes: ClassTable,
    images: Vec<GtEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchLabelEntry {
    certain: Vec<ObjectEntry>,
    uncertain_file: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelEntry {
    id: String,
    image: String,
    semantic: String,
    instance: BranchLabelEntry,
    amodal: BranchLabelEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    paste_log: Option<Vec<PasteRecord>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelManifest {
    classes: ClassTable,
    images: Vec<LabelEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolEntry {
    class: ClassId,
    score: f64,
    full_mask_file: String,
    overlap_mask_file: String,
    pixels_file: String,
    source_image_id: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolIndex {
    objects: Vec<PoolEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentEntry {
    id: u32,
    class: ClassId,
    score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amodal_mask_file: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PanopticEntry {
    classes_file: String,
    segments_file: String,
    segments: Vec<SegmentEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FusedEntry {
    id: String,
    semantic: String,
    instances: Vec<ObjectEntry>,
    amodal_instances: Vec<ObjectEntry>,
    panoptic: PanopticEntry,
    amodal_panoptic: PanopticEntry,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FusedManifest {
    classes: ClassTable,
    images: Vec<FusedEntry>,
}

/// Source image and raw predictions of one dataset item.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSample {
    pub id: String,
    pub image: Image,
    pub predictions: PredictionSet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionDataset {
    pub classes: ClassTable,
    pub samples: Vec<PredictionSample>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GtSample {
    pub id: String,
    pub gt: GroundTruth,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GtDataset {
    pub classes: ClassTable,
    pub samples: Vec<GtSample>,
}

/// An image with its pseudo-labels; mixed samples also carry a paste log.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub id: String,
    pub image: Image,
    pub labels: OmniPseudoLabel,
    pub paste_log: Option<Vec<PasteRecord>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelDataset {
    pub classes: ClassTable,
    pub samples: Vec<LabeledSample>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusedSample {
    pub id: String,
    pub outputs: FusedOutputs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusedDataset {
    pub classes: ClassTable,
    pub samples: Vec<FusedSample>,
}

/// Resolves references against one manifest and builds errors naming it.
struct Ctx {
    manifest: PathBuf,
    base: PathBuf,
}

impl Ctx {
    fn new(manifest: &Path) -> Ctx {
        Ctx {
            manifest: manifest.to_path_buf(),
            base: manifest.parent().map(Path::to_path_buf).unwrap_or_default(),
        }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.base.join(rel)
    }

    fn bad(&self, field: impl Into<String>, detail: impl std::fmt::Display) -> Error {
        Error::manifest(&self.manifest, field, detail.to_string())
    }

    fn parse<T: DeserializeOwned>(&self) -> Result<T> {
        let text =
            std::fs::read_to_string(&self.manifest).map_err(|e| Error::io(&self.manifest, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            self.bad(
                if field == "." { "<root>".into() } else { field },
                e.into_inner(),
            )
        })
    }

    fn id(&self, field: &str, id: &str) -> Result<()> {
        let ok = !id.is_empty()
            && id != "."
            && id != ".."
            && !id.contains(['/', '\\'])
            && !id.chars().any(char::is_control);
        if ok {
            Ok(())
        } else {
            Err(self.bad(field, format!("`{id}` is not a usable file name")))
        }
    }

    fn class(&self, field: &str, classes: &ClassTable, c: ClassId, thing: bool) -> Result<()> {
        if !classes.contains(c) {
            return Err(self.bad(field, format!("class {} is not in the class table", c.0)));
        }
        if thing && !classes.is_thing(c) {
            return Err(self.bad(field, format!("class {} is not a thing class", c.0)));
        }
        Ok(())
    }

    fn mask(&self, field: &str, rel: &str, dims: (usize, usize)) -> Result<BinaryMask> {
        let mask = codec::read_mask(&self.path(rel))?;
        if mask.dims() != dims {
            return Err(self.bad(
                field,
                format!("{rel} is {:?}, expected {:?}", mask.dims(), dims),
            ));
        }
        Ok(mask)
    }

    fn label_map(&self, field: &str, rel: &str, dims: Option<(usize, usize)>) -> Result<LabelMap> {
        let map = codec::read_label_map(&self.path(rel))?;
        if let Some(d) = dims {
            if map.dims() != d {
                return Err(self.bad(field, format!("{rel} is {:?}, expected {d:?}", map.dims())));
            }
        }
        Ok(map)
    }

    fn objects(
        &self,
        field: &str,
        entries: &[ObjectEntry],
        classes: &ClassTable,
        dims: (usize, usize),
        ordinal: u64,
    ) -> Result<Vec<InstancePrediction>> {
        let mut out = Vec::with_capacity(entries.len());
        for (k, e) in entries.iter().enumerate() {
            let f = format!("{field}[{k}]");
            self.class(&format!("{f}.class"), classes, e.class, true)?;
            let mask = self.mask(&format!("{f}.mask_file"), &e.mask_file, dims)?;
            let seq = e.seq.unwrap_or_else(|| semantic_seq(ordinal, k));
            let p = InstancePrediction::new(e.class, e.score, mask, seq)
                .map_err(|err| self.bad(format!("{f}.score"), err))?;
            out.push(p);
        }
        Ok(out)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("manifest serializes");
    text.push('\n');
    codec::write_bytes(path, text.as_bytes())
}

fn image_ext(image: &Image) -> &'static str {
    if image.channels() == 1 {
        "pgm"
    } else {
        "ppm"
    }
}

fn write_objects(
    dir: &Path,
    prefix: &str,
    objects: &[InstancePrediction],
    keep_seq: bool,
) -> Result<Vec<ObjectEntry>> {
    objects
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let rel = format!("{prefix}_{k:03}.ulkm");
            codec::write_mask(&dir.join(&rel), &p.mask)?;
            Ok(ObjectEntry {
                class: p.class,
                score: p.score,
                mask_file: rel,
                seq: keep_seq.then_some(p.object_seq),
            })
        })
        .collect()
}

/// Loads a prediction manifest. Objects are numbered
/// `(image index << 32) | position` within each branch.
pub fn load_predictions(manifest: &Path) -> Result<PredictionDataset> {
    let ctx = Ctx::new(manifest);
    let m: PredictionManifest = ctx.parse()?;
    let mut samples = Vec::with_capacity(m.images.len());
    for (i, e) in m.images.iter().enumerate() {
        let f = format!("images[{i}]");
        ctx.id(&format!("{f}.id"), &e.id)?;
        let semantic = codec::read_probs(&ctx.path(&e.semantic)).map_err(|err| match err {
            Error::ConfigInvalid(msg) => ctx.bad(format!("{f}.semantic"), msg),
            other => other,
        })?;
        if semantic.num_classes() != m.classes.len() {
            return Err(ctx.bad(
                format!("{f}.semantic"),
                format!(
                    "{} has {} classes, the table {}",
                    e.semantic,
                    semantic.num_classes(),
                    m.classes.len()
                ),
            ));
        }
        let dims = semantic.dims();
        let image = codec::read_image(&ctx.path(&e.image))?;
        if image.dims() != dims {
            return Err(ctx.bad(
                format!("{f}.image"),
                format!("{} is {:?}, expected {dims:?}", e.image, image.dims()),
            ));
        }
        let instance = ctx.objects(
            &format!("{f}.instance"),
            &e.instance,
            &m.classes,
            dims,
            i as u64,
        )?;
        let amodal = ctx.objects(
            &format!("{f}.amodal"),
            &e.amodal,
            &m.classes,
            dims,
            i as u64,
        )?;
        samples.push(PredictionSample {
            id: e.id.clone(),
            image,
            predictions: PredictionSet {
                semantic,
                instance,
                amodal,
            },
        });
    }
    Ok(PredictionDataset {
        classes: m.classes,
        samples,
    })
}

pub fn save_predictions(dir: &Path, data: &PredictionDataset) -> Result<PathBuf> {
    let mut images = Vec::with_capacity(data.samples.len());
    for s in &data.samples {
        let image = format!("images/{}.{}", s.id, image_ext(&s.image));
        codec::write_image(&dir.join(&image), &s.image)?;
        let semantic = format!("predictions/{}/semantic.ulkp", s.id);
        codec::write_probs(&dir.join(&semantic), &s.predictions.semantic)?;
        let prefix = format!("predictions/{}", s.id);
        images.push(PredictionEntry {
            id: s.id.clone(),
            image,
            semantic,
            instance: write_objects(
                dir,
                &format!("{prefix}/instance"),
                &s.predictions.instance,
                false,
            )?,
            amodal: write_objects(
                dir,
                &format!("{prefix}/amodal"),
                &s.predictions.amodal,
                false,
            )?,
        });
    }
    let path = dir.join(PREDICTIONS_MANIFEST);
    write_json(
        &path,
        &PredictionManifest {
            classes: data.classes.clone(),
            images,
        },
    )?;
    Ok(path)
}

pub fn load_gt(manifest: &Path) -> Result<GtDataset> {
    let ctx = Ctx::new(manifest);
    let m: GtManifest = ctx.parse()?;
    let mut samples = Vec::with_capacity(m.images.len());
    for (i, e) in m.images.iter().enumerate() {
        let f = format!("images[{i}]");
        ctx.id(&format!("{f}.id"), &e.id)?;
        let semantic = ctx.label_map(&format!("{f}.semantic"), &e.semantic, None)?;
        let dims = semantic.dims();
        let mut objects = Vec::with_capacity(e.objects.len());
        for (k, o) in e.objects.iter().enumerate() {
            let g = format!("{f}.objects[{k}]");
            ctx.class(&format!("{g}.class"), &m.classes, o.class, true)?;
            objects.push(GtObject {
                class: o.class,
                visible: ctx.mask(
                    &format!("{g}.visible_mask_file"),
                    &o.visible_mask_file,
                    dims,
                )?,
                amodal: ctx.mask(&format!("{g}.amodal_mask_file"), &o.amodal_mask_file, dims)?,
                depth: k,
            });
        }
        let gt = GroundTruth { semantic, objects };
        gt.panoptic()
            .map_err(|err| ctx.bad(format!("{f}.objects"), err))?;
        samples.push(GtSample {
            id: e.id.clone(),
            gt,
        });
    }
    Ok(GtDataset {
        classes: m.classes,
        samples,
    })
}

pub fn save_gt(dir: &Path, data: &GtDataset) -> Result<PathBuf> {
    let mut images = Vec::with_capacity(data.samples.len());
    for s in &data.samples {
        let prefix = format!("gt/{}", s.id);
        let semantic = format!("{prefix}/semantic.pgm");
        codec::write_label_map(&dir.join(&semantic), &s.gt.semantic)?;
        let mut objects = Vec::with_capacity(s.gt.objects.len());
        for (k, o) in s.gt.objects.iter().enumerate() {
            let visible = format!("{prefix}/visible_{k:03}.ulkm");
            let amodal = format!("{prefix}/amodal_{k:03}.ulkm");
            codec::write_mask(&dir.join(&visible), &o.visible)?;
            codec::write_mask(&dir.join(&amodal), &o.amodal)?;
            objects.push(GtObjectEntry {
                class: o.class,
                visible_mask_file: visible,
                amodal_mask_file: amodal,
            });
        }
        images.push(GtEntry {
            id: s.id.clone(),
            semantic,
            objects,
        });
    }
    let path = dir.join(GT_MANIFEST);
    write_json(
        &path,
        &GtManifest {
            classes: data.classes.clone(),
            images,
        },
    )?;
    Ok(path)
}

pub fn load_labels(manifest: &Path) -> Result<LabelDataset> {
    let ctx = Ctx::new(manifest);
    let m: LabelManifest = ctx.parse()?;
    let mut samples = Vec::with_capacity(m.images.len());
    for (i, e) in m.images.iter().enumerate() {
        let f = format!("images[{i}]");
        ctx.id(&format!("{f}.id"), &e.id)?;
        let image = codec::read_image(&ctx.path(&e.image))?;
        let dims = image.dims();
        let semantic = ctx.label_map(&format!("{f}.semantic"), &e.semantic, Some(dims))?;
        let branch = |name: &str, b: &BranchLabelEntry| -> Result<BranchLabel> {
            Ok(BranchLabel {
                certain: ctx.objects(
                    &format!("{f}.{name}.certain"),
                    &b.certain,
                    &m.classes,
                    dims,
                    i as u64,
                )?,
                uncertain: ctx.mask(
                    &format!("{f}.{name}.uncertain_file"),
                    &b.uncertain_file,
                    dims,
                )?,
            })
        };
        let instance = branch("instance", &e.instance)?;
        let amodal = branch("amodal", &e.amodal)?;
        samples.push(LabeledSample {
            id: e.id.clone(),
            image,
            labels: OmniPseudoLabel {
                semantic,
                instance,
                amodal,
            },
            paste_log: e.paste_log.clone(),
        });
    }
    Ok(LabelDataset {
        classes: m.classes,
        samples,
    })
}

pub fn save_labels(dir: &Path, data: &LabelDataset) -> Result<PathBuf> {
    let mut images = Vec::with_capacity(data.samples.len());
    for s in &data.samples {
        let image = format!("images/{}.{}", s.id, image_ext(&s.image));
        codec::write_image(&dir.join(&image), &s.image)?;
        let prefix = format!("labels/{}", s.id);
        let semantic = format!("{prefix}/semantic.pgm");
        codec::write_label_map(&dir.join(&semantic), &s.labels.semantic)?;
        let branch = |name: &str, b: &BranchLabel| -> Result<BranchLabelEntry> {
            let uncertain = format!("{prefix}/{name}_uncertain.ulkm");
            codec::write_mask(&dir.join(&uncertain), &b.uncertain)?;
            Ok(BranchLabelEntry {
                certain: write_objects(dir, &format!("{prefix}/{name}"), &b.certain, true)?,
                uncertain_file: uncertain,
            })
        };
        let instance = branch("instance", &s.labels.instance)?;
        let amodal = branch("amodal", &s.labels.amodal)?;
        images.push(LabelEntry {
            id: s.id.clone(),
            image,
            semantic,
            instance,
            amodal,
            paste_log: s.paste_log.clone(),
        });
    }
    let path = dir.join(LABELS_MANIFEST);
    write_json(
        &path,
        &LabelManifest {
            classes: data.classes.clone(),
            images,
        },
    )?;
    Ok(path)
}

/// Loads `index.json` from a pool directory.
pub fn load_pool(dir: &Path) -> Result<ObjectPool> {
    let ctx = Ctx::new(&dir.join(POOL_INDEX));
    let index: PoolIndex = ctx.parse()?;
    let mut objects = Vec::with_capacity(index.objects.len());
    for (k, e) in index.objects.iter().enumerate() {
        let f = format!("objects[{k}]");
        let full = codec::read_mask(&ctx.path(&e.full_mask_file))?;
        let overlap = ctx.mask(
            &format!("{f}.overlap_mask_file"),
            &e.overlap_mask_file,
            full.dims(),
        )?;
        let pixels = codec::read_image(&ctx.path(&e.pixels_file))?;
        let obj = PoolObject::new(
            e.class,
            e.score,
            full,
            overlap,
            pixels,
            e.source_image_id.clone(),
        )
        .map_err(|err| ctx.bad(&f, err))?;
        objects.push(obj);
    }
    Ok(ObjectPool::new(objects))
}

pub fn save_pool(dir: &Path, pool: &ObjectPool) -> Result<PathBuf> {
    let mut objects = Vec::with_capacity(pool.len());
    for (k, o) in pool.objects().iter().enumerate() {
        let full = format!("objects/{k:05}_full.ulkm");
        let overlap = format!("objects/{k:05}_overlap.ulkm");
        let pixels = format!("objects/{k:05}_pixels.{}", image_ext(&o.pixels));
        codec::write_mask(&dir.join(&full), &o.full_mask)?;
        codec::write_mask(&dir.join(&overlap), &o.overlap_mask)?;
        codec::write_image(&dir.join(&pixels), &o.pixels)?;
        objects.push(PoolEntry {
            class: o.class,
            score: o.score,
            full_mask_file: full,
            overlap_mask_file: overlap,
            pixels_file: pixels,
            source_image_id: o.source_image_id.clone(),
        });
    }
    let path = dir.join(POOL_INDEX);
    write_json(&path, &PoolIndex { objects })?;
    Ok(path)
}

fn write_panoptic(dir: &Path, prefix: &str, map: &PanopticMap) -> Result<PanopticEntry> {
    let (h, w) = map.dims();
    let classes_file = format!("{prefix}_classes.pgm");
    let segments_file = format!("{prefix}.ulks");
    codec::write_label_map(&dir.join(&classes_file), map.classes())?;
    codec::write_segments(&dir.join(&segments_file), h, w, map.segment_ids())?;
    let mut segments = Vec::with_capacity(map.segments().len());
    for s in map.segments() {
        let amodal_mask_file = match &s.amodal {
            Some(m) => {
                let rel = format!("{prefix}_amodal_{:05}.ulkm", s.id);
                codec::write_mask(&dir.join(&rel), m)?;
                Some(rel)
            }
            None => None,
        };
        segments.push(SegmentEntry {
            id: s.id,
            class: s.class,
            score: s.score,
            amodal_mask_file,
        });
    }
    Ok(PanopticEntry {
        classes_file,
        segments_file,
        segments,
    })
}

fn read_panoptic(
    ctx: &Ctx,
    field: &str,
    e: &PanopticEntry,
    classes: &ClassTable,
    dims: (usize, usize),
) -> Result<PanopticMap> {
    let class_map = ctx.label_map(
        &format!("{field}.classes_file"),
        &e.classes_file,
        Some(dims),
    )?;
    let (h, w, ids) = codec::read_segments(&ctx.path(&e.segments_file))?;
    if (h, w) != dims {
        return Err(ctx.bad(
            format!("{field}.segments_file"),
            format!("{} is {:?}, expected {dims:?}", e.segments_file, (h, w)),
        ));
    }
    let mut table = Vec::with_capacity(e.segments.len());
    for (k, s) in e.segments.iter().enumerate() {
        let f = format!("{field}.segments[{k}]");
        ctx.class(&format!("{f}.class"), classes, s.class, false)?;
        let amodal = match &s.amodal_mask_file {
            Some(rel) => Some(ctx.mask(&format!("{f}.amodal_mask_file"), rel, dims)?),
            None => None,
        };
        table.push((s.id, s.class, s.score, amodal));
    }
    PanopticMap::from_id_grid(class_map, &ids, table)
        .map_err(|err| ctx.bad(format!("{field}.segments"), err))
}

pub fn load_fused(manifest: &Path) -> Result<FusedDataset> {
    let ctx = Ctx::new(manifest);
    let m: FusedManifest = ctx.parse()?;
    let mut samples = Vec::with_capacity(m.images.len());
    for (i, e) in m.images.iter().enumerate() {
        let f = format!("images[{i}]");
        ctx.id(&format!("{f}.id"), &e.id)?;
        let semantic = ctx.label_map(&format!("{f}.semantic"), &e.semantic, None)?;
        let dims = semantic.dims();
        let outputs = FusedOutputs {
            instances: ctx.objects(
                &format!("{f}.instances"),
                &e.instances,
                &m.classes,
                dims,
                i as u64,
            )?,
            amodal_instances: ctx.objects(
                &format!("{f}.amodal_instances"),
                &e.amodal_instances,
                &m.classes,
                dims,
                i as u64,
            )?,
            panoptic: read_panoptic(
                &ctx,
                &format!("{f}.panoptic"),
                &e.panoptic,
                &m.classes,
                dims,
            )?,
            amodal_panoptic: read_panoptic(
                &ctx,
                &format!("{f}.amodal_panoptic"),
                &e.amodal_panoptic,
                &m.classes,
                dims,
            )?,
            semantic,
        };
        samples.push(FusedSample {
            id: e.id.clone(),
            outputs,
        });
    }
    Ok(FusedDataset {
        classes: m.classes,
        samples,
    })
}

pub fn save_fused(dir: &Path, data: &FusedDataset) -> Result<PathBuf> {
    let mut images = Vec::with_capacity(data.samples.len());
    for s in &data.samples {
        let prefix = format!("fused/{}", s.id);
        let semantic = format!("{prefix}/semantic.pgm");
        codec::write_label_map(&dir.join(&semantic), &s.outputs.semantic)?;
        images.push(FusedEntry {
            id: s.id.clone(),
            semantic,
            instances: write_objects(
                dir,
                &format!("{prefix}/instance"),
                &s.outputs.instances,
                true,
            )?,
            amodal_instances: write_objects(
                dir,
                &format!("{prefix}/amodal_instance"),
                &s.outputs.amodal_instances,
                true,
            )?,
            panoptic: write_panoptic(dir, &format!("{prefix}/panoptic"), &s.outputs.panoptic)?,
            amodal_panoptic: write_panoptic(
                dir,
                &format!("{prefix}/amodal_panoptic"),
                &s.outputs.amodal_panoptic,
            )?,
        });
    }
    let path = dir.join(FUSED_MANIFEST);
    write_json(
        &path,
        &FusedManifest {
            classes: data.classes.clone(),
            images,
        },
    )?;
    Ok(path)
}
