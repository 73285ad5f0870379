use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

use unlock_core::codec::write_bytes;
use unlock_core::dataset::{
    self, PredictionDataset, FUSED_MANIFEST, GT_MANIFEST, PREDICTIONS_MANIFEST,
};
use unlock_core::metrics::MetricReport;
use unlock_core::opll::BranchThresholds;
use unlock_core::pipeline::{self, run_pipeline};
use unlock_core::synth::{self, NoiseConfig, SceneConfig, RIDER};
use unlock_core::{ClassTable, Error, PipelineConfig, ThresholdParams};

use crate::args::*;
use crate::log;

fn config_error(msg: String) -> anyhow::Error {
    Error::ConfigInvalid(msg).into()
}

fn read_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())?;
    Ok(())
}

fn override_params(p: &mut ThresholdParams, fix: Option<f64>, per: Option<f64>) {
    if let Some(f) = fix {
        p.fix = f;
    }
    if let Some(q) = per {
        p.per = q;
    }
}

fn base_config(path: Option<&Path>) -> Result<PipelineConfig> {
    Ok(match path {
        Some(p) => read_json_config(p)?,
        None => PipelineConfig::default(),
    })
}

fn finish_config(cfg: PipelineConfig) -> Result<PipelineConfig> {
    cfg.validate()?;
    Ok(cfg)
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = base_config(self.config.as_deref())?;
        override_params(&mut cfg.semantic, self.semantic_fix, self.semantic_per);
        override_params(&mut cfg.instance, self.instance_fix, self.instance_per);
        override_params(&mut cfg.amodal, self.amodal_fix, self.amodal_per);
        override_params(&mut cfg.strict, self.strict_fix, self.strict_per);
        if let Some(r) = self.r {
            cfg.r = r;
        }
        if let Some(k) = self.capacity {
            cfg.pool_capacity = k;
        }
        if let Some(f) = self.confidence_floor {
            cfg.confidence_floor = f;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        finish_config(cfg)
    }
}

fn load_predictions(manifest: &Path) -> Result<PredictionDataset> {
    let data = dataset::load_predictions(manifest)?;
    log::info(
        "loaded",
        json!({"manifest": manifest, "images": data.samples.len()}),
    );
    Ok(data)
}

fn warn_if_empty(name: &str, th: &BranchThresholds) {
    if th.is_empty() {
        log::warn(
            "empty_dataset",
            json!({"branch": name, "detail": "no scored objects; every object is uncertain"}),
        );
    }
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let classes = synth::default_palette();
    let mut scene: SceneConfig = match &args.scene_config {
        Some(p) => read_json_config(p)?,
        None => SceneConfig::default(),
    };
    let noise = match (&args.noise_config, args.noise) {
        (Some(p), _) => read_json_config(p)?,
        (None, NoisePreset::Zero) => NoiseConfig::zero(),
        (None, NoisePreset::Typical) => NoiseConfig::typical(),
        (None, NoisePreset::Rare) => {
            scene.guaranteed.push(RIDER);
            NoiseConfig::rare_class(RIDER)
        }
    };
    scene.validate(&classes)?;
    noise.validate(classes.len())?;
    let data = synth::generate_dataset(args.seed, args.count, &scene, &noise, &classes)?;
    let objects: usize = data.iter().map(|s| s.scene.gt.objects.len()).sum();
    let (preds, gt) = synth::into_datasets(data, &classes);
    let pred_path = dataset::save_predictions(&args.out, &preds)?;
    let gt_path = dataset::save_gt(&args.out, &gt)?;
    log::info(
        "synth_done",
        json!({
            "images": args.count,
            "gt_objects": objects,
            "predictions": pred_path,
            "gt": gt_path,
        }),
    );
    Ok(())
}

#[derive(Serialize)]
struct ThresholdReport<'a> {
    semantic: &'a BranchThresholds,
    instance: &'a BranchThresholds,
    amodal: &'a BranchThresholds,
    strict: &'a BranchThresholds,
}

pub fn thresholds(args: &ThresholdsArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let data = load_predictions(&args.manifest)?;
    let stats = pipeline::dataset_stats(&data)?;
    let th = pipeline::compute_thresholds(&stats, &cfg, &data.classes)?;
    let strict = pipeline::strict_thresholds(&stats, &cfg, &data.classes)?;
    for (name, b) in [
        ("semantic", &th.semantic),
        ("instance", &th.instance),
        ("amodal", &th.amodal),
    ] {
        warn_if_empty(name, b);
    }
    let report = ThresholdReport {
        semantic: &th.semantic,
        instance: &th.instance,
        amodal: &th.amodal,
        strict: &strict,
    };
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    log::info("thresholds", json!({"thresholds": report}));
    Ok(())
}

pub fn pseudo_label(args: &PseudoLabelArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let data = load_predictions(&args.manifest)?;
    let stats = pipeline::dataset_stats(&data)?;
    let th = pipeline::compute_thresholds(&stats, &cfg, &data.classes)?;
    for (name, b) in [
        ("semantic", &th.semantic),
        ("instance", &th.instance),
        ("amodal", &th.amodal),
    ] {
        warn_if_empty(name, b);
    }
    let labels = pipeline::pseudo_label_dataset(&data, &th)?;
    write_json(&args.out.join("thresholds.json"), &th)?;
    let path = dataset::save_labels(&args.out, &labels)?;
    log::info(
        "pseudo_labels_done",
        json!({
            "manifest": path,
            "certain_instances": labels.samples.iter().map(|s| s.labels.instance.certain.len()).sum::<usize>(),
            "certain_amodal": labels.samples.iter().map(|s| s.labels.amodal.certain.len()).sum::<usize>(),
        }),
    );
    Ok(())
}

fn histogram(classes: &ClassTable, pool: &unlock_core::ObjectPool) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = pool
        .class_histogram()
        .into_iter()
        .map(|(c, n)| (classes.name(c).to_string(), n.into()))
        .collect();
    serde_json::Value::Object(map)
}

pub fn pool_build(args: &PoolBuildArgs) -> Result<()> {
    let mut cfg = base_config(args.config.as_deref())?;
    override_params(&mut cfg.strict, args.fix, args.per);
    if let Some(k) = args.capacity {
        cfg.pool_capacity = k;
    }
    let cfg = finish_config(cfg)?;
    let data = load_predictions(&args.manifest)?;
    let stats = pipeline::dataset_stats(&data)?;
    let strict = pipeline::strict_thresholds(&stats, &cfg, &data.classes)?;
    warn_if_empty("amodal", &strict);
    let pool = pipeline::build_pool(&data, &strict, cfg.pool_capacity)?;
    let path = dataset::save_pool(&args.out, &pool)?;
    log::info(
        "pool_built",
        json!({
            "index": path,
            "objects": pool.len(),
            "capacity": cfg.pool_capacity,
            "strict": cfg.strict,
            "class_histogram": histogram(&data.classes, &pool),
        }),
    );
    Ok(())
}

pub fn mix(args: &MixArgs) -> Result<()> {
    let mut cfg = base_config(args.config.as_deref())?;
    if let Some(r) = args.r {
        cfg.r = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let cfg = finish_config(cfg)?;
    let labels = dataset::load_labels(&args.manifest)?;
    let pool = dataset::load_pool(&args.pool)?;
    let mixed = pipeline::mix_dataset(&labels, &pool, cfg.r, cfg.seed)?;
    let path = dataset::save_labels(&args.out, &mixed)?;
    log::info(
        "mix_done",
        json!({"manifest": path, "images": mixed.samples.len(), "pool_objects": pool.len(), "r": cfg.r, "seed": cfg.seed}),
    );
    Ok(())
}

pub fn fuse(args: &FuseArgs) -> Result<()> {
    let mut cfg = base_config(args.config.as_deref())?;
    if let Some(f) = args.confidence_floor {
        cfg.confidence_floor = f;
    }
    let cfg = finish_config(cfg)?;
    let data = load_predictions(&args.manifest)?;
    let fused = pipeline::fuse_dataset(&data, cfg.confidence_floor)?;
    let path = dataset::save_fused(&args.out, &fused)?;
    log::info(
        "fuse_done",
        json!({"manifest": path, "images": fused.samples.len()}),
    );
    Ok(())
}

fn restrict(report: MetricReport, mode: EvalMode) -> MetricReport {
    let keep = |m: EvalMode| mode == EvalMode::All || mode == m;
    MetricReport {
        miou: report.miou.filter(|_| keep(EvalMode::Miou)),
        mpq: report.mpq.filter(|_| keep(EvalMode::Pq)),
        mapq: report.mapq.filter(|_| keep(EvalMode::Apq)),
        map: report.map.filter(|_| keep(EvalMode::Ap)),
        maap: report.maap.filter(|_| keep(EvalMode::Aap)),
    }
}

fn percent_means(report: &MetricReport) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = report
        .means()
        .into_iter()
        .map(|(name, v)| (name.to_string(), v.map(|v| v * 100.0).into()))
        .collect();
    serde_json::Value::Object(map)
}

fn emit_report(report: &MetricReport, classes: &ClassTable, out: Option<&Path>) -> Result<()> {
    if let Some(out) = out {
        write_json(out, report)?;
    }
    eprint!("{}", report.render_table(classes));
    log::info(
        "report",
        json!({"means_x100": percent_means(report), "report": report}),
    );
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let fused = dataset::load_fused(&args.pred.join(FUSED_MANIFEST))?;
    let gt = dataset::load_gt(&args.gt.join(GT_MANIFEST))?;
    let report = restrict(pipeline::evaluate(&fused, &gt)?, args.mode);
    emit_report(&report, &fused.classes, args.out.as_deref())
}

pub fn run(args: &PipelineArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let out: PathBuf = args.out.clone().unwrap_or_else(|| args.data.join("run"));
    let data = load_predictions(&args.data.join(PREDICTIONS_MANIFEST))?;
    let gt_path = args.data.join(GT_MANIFEST);
    let gt = if gt_path.exists() {
        Some(dataset::load_gt(&gt_path)?)
    } else {
        log::warn("no_ground_truth", json!({"expected": gt_path}));
        None
    };
    let result = run_pipeline(&data, gt.as_ref(), &cfg)
        .with_context(|| format!("pipeline over {}", args.data.display()))?;
    let th = &result.thresholds;
    for (name, b) in [
        ("semantic", &th.semantic),
        ("instance", &th.instance),
        ("amodal", &th.amodal),
    ] {
        warn_if_empty(name, b);
    }
    write_json(&out.join("config.json"), &cfg)?;
    write_json(
        &out.join("thresholds.json"),
        &ThresholdReport {
            semantic: &th.semantic,
            instance: &th.instance,
            amodal: &th.amodal,
            strict: &result.strict,
        },
    )?;
    dataset::save_labels(&out.join("labels"), &result.labels)?;
    dataset::save_pool(&out.join("pool"), &result.pool)?;
    dataset::save_labels(&out.join("mixed"), &result.mixed)?;
    dataset::save_fused(&out.join("fused"), &result.fused)?;
    log::info(
        "pipeline_done",
        json!({
            "out": out,
            "summary": result.summary,
            "class_histogram": histogram(&data.classes, &result.pool),
        }),
    );
    if let Some(report) = &result.report {
        emit_report(report, &data.classes, Some(&out.join("report.json")))?;
    }
    Ok(())
}
