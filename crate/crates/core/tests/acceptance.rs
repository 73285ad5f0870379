//! Acceptance criteria. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use unlock_core::adcl::{spatial_aware_mix, PasteOutcome, PASTE_SEQ_BASE};
use unlock_core::class::{ClassKind, PixelLabel};
use unlock_core::codec;
use unlock_core::fusion::Segment;
use unlock_core::metrics::{compute_pq, PqMode};
use unlock_core::opll::{
    compute_cs_thresholds, compute_uncertain_region, generate_omni_pseudo_label,
    masked_cross_entropy, uncertainty_guided_bce, ProbGrid, ScoreStats,
};
use unlock_core::pipeline;
use unlock_core::synth::{self, NoiseConfig, SceneConfig, RIDER};
use unlock_core::{
    rle_decode, rle_encode, BinaryMask, Branch, BranchThresholds, ClassId, ClassTable,
    CsThresholds, Image, InstancePrediction, LabelMap, PanopticMap, PipelineConfig,
    SemanticPrediction, SplitMix64, ThresholdParams,
};

type Criterion = (&'static str, fn() -> String);

fn main() {
    let criteria: [Criterion; 9] = [
        ("rle_round_trip_and_golden_files", rle_round_trip),
        ("cs_threshold_maximality_and_dominance", cs_thresholds),
        ("certain_uncertain_disjointness", disjointness),
        ("loss_gradients_match_finite_differences", loss_gradients),
        ("mixing_invariants", mixing_invariants),
        ("pq_matches_brute_force_oracle", pq_oracle),
        ("zero_noise_fixed_point", zero_noise_fixed_point),
        ("cs_recovers_rare_class", cs_vs_fixed_recall),
        ("config_defaults", config_fidelity),
    ];
    panic::set_hook(Box::new(|_| {}));
    let total = Instant::now();
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} ({secs:.2}s)"),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                println!("FAIL  {name}: {msg} ({secs:.2}s)");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.2}s)",
        criteria.len() - failed,
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- RLE

fn random_mask(rng: &mut SplitMix64, h: usize, w: usize) -> BinaryMask {
    match rng.below(4) {
        0 => {
            let p = rng.next_f64();
            BinaryMask::from_fn(h, w, |_, _| rng.chance(p))
        }
        1 => {
            // long runs
            let mut bits = Vec::with_capacity(h * w);
            let mut v = rng.chance(0.5);
            while bits.len() < h * w {
                let run = 1 + rng.below(2 * w as u64) as usize;
                bits.extend(std::iter::repeat_n(v, run.min(h * w - bits.len())));
                v = !v;
            }
            BinaryMask::from_bools(h, w, &bits)
        }
        2 => BinaryMask::full(h, w),
        _ => BinaryMask::new(h, w),
    }
}

fn rle_round_trip() -> String {
    let mut rng = SplitMix64::new(0x5eed);
    for t in 0..1000 {
        let h = rng.range_inclusive(1, 64);
        let w = rng.range_inclusive(1, 64);
        let m = random_mask(&mut rng, h, w);
        let runs = rle_encode(&m);
        assert_eq!(runs.total(), (h * w) as u64, "trial {t}: run total");
        assert!(
            runs.0[1..].iter().all(|&r| r > 0),
            "trial {t}: empty inner run"
        );
        assert_eq!(rle_decode(&runs, h, w).unwrap(), m, "trial {t}: rle");
        assert_eq!(
            codec::decode_mask(&codec::encode_mask(&m)).unwrap(),
            m,
            "trial {t}: file"
        );
    }

    let m = BinaryMask::from_rows(&["0110"]);
    assert_eq!(rle_encode(&m).0, vec![1, 2, 1]);
    assert_eq!(rle_encode(&BinaryMask::from_rows(&["11"])).0, vec![0, 2]);
    let le = |v: &[u32]| v.iter().flat_map(|x| x.to_le_bytes()).collect::<Vec<u8>>();
    let mut golden: Vec<(&str, Vec<u8>, Vec<u8>)> = Vec::new();

    let mut mask_bytes = b"ULKM".to_vec();
    mask_bytes.extend(le(&[1, 4, 3, 1, 2, 1]));
    golden.push(("mask", codec::encode_mask(&m), mask_bytes.clone()));
    assert_eq!(codec::decode_mask(&mask_bytes).unwrap(), m);

    let sem = SemanticPrediction::new(1, 1, 2, vec![0.25, 0.75]).unwrap();
    let mut prob_bytes = b"ULKP".to_vec();
    prob_bytes.extend(le(&[1, 1, 2]));
    prob_bytes.extend([0x00, 0x00, 0x80, 0x3e, 0x00, 0x00, 0x40, 0x3f]);
    golden.push((
        "probabilities",
        codec::encode_probs(&sem),
        prob_bytes.clone(),
    ));
    assert_eq!(codec::decode_probs(&prob_bytes).unwrap(), sem);

    let mut seg_bytes = b"ULKS".to_vec();
    seg_bytes.extend(le(&[1, 2, 0, 7]));
    golden.push((
        "segments",
        codec::encode_segments(1, 2, &[0, 7]),
        seg_bytes.clone(),
    ));
    assert_eq!(
        codec::decode_segments(&seg_bytes).unwrap(),
        (1, 2, vec![0, 7])
    );

    let labels = LabelMap::from_codes(1, 2, vec![3, 254]);
    let pgm = b"P5\n2 1\n255\n\x03\xfe".to_vec();
    golden.push(("label map", codec::encode_label_map(&labels), pgm.clone()));
    assert_eq!(codec::decode_label_map(&pgm).unwrap(), labels);

    let image = Image::from_samples(1, 1, 3, vec![1, 2, 3]).unwrap();
    let ppm = b"P6\n1 1\n255\n\x01\x02\x03".to_vec();
    golden.push(("image", codec::encode_pnm(&image), ppm.clone()));
    assert_eq!(codec::decode_pnm(&ppm).unwrap(), image);

    for (name, got, want) in &golden {
        assert_eq!(got, want, "{name} bytes");
    }
    format!(
        "1000 random masks bit-exact, {} golden files byte-exact",
        golden.len()
    )
}

// ---------------------------------------------------------------- CS thresholds

struct Trial {
    items: BTreeMap<ClassId, Vec<(f64, u64)>>,
    fix_step: u32,
    per_pct: u32,
}

fn params(fix_step: u32, per_pct: u32) -> ThresholdParams {
    ThresholdParams::new(fix_step as f64 / 20.0, per_pct as f64 / 100.0)
}

fn admitted(trial: &Trial, fix_step: u32, per_pct: u32) -> BTreeMap<ClassId, Vec<u64>> {
    let mut stats = ScoreStats::new();
    for (&c, items) in &trial.items {
        for &(s, q) in items {
            stats.push(c, s, q);
        }
    }
    let th =
        compute_cs_thresholds(Branch::Instance, &stats, params(fix_step, per_pct), []).unwrap();
    let p = params(fix_step, per_pct);
    let mut out = BTreeMap::new();
    for (&c, items) in &trial.items {
        let n = items.len();
        let fixed = items.iter().filter(|(s, _)| *s > p.fix).count();
        let k = (per_pct as usize * n).div_ceil(100);
        let expected = fixed.max(k);
        let t = &th.classes[&c];
        assert_eq!(t.admitted_count, expected, "class {} admitted_count", c.0);
        let mut ranked = items.clone();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let seqs: Vec<u64> = ranked
            .iter()
            .filter(|(s, q)| th.admits(c, *s, *q))
            .map(|(_, q)| *q)
            .collect();
        assert_eq!(seqs.len(), expected, "class {} recount", c.0);
        let prefix: Vec<u64> = ranked[..expected].iter().map(|(_, q)| *q).collect();
        assert_eq!(
            seqs, prefix,
            "class {}: admitted set is not a ranking prefix",
            c.0
        );
        out.insert(c, seqs);
    }
    out
}

fn subset(a: &BTreeMap<ClassId, Vec<u64>>, b: &BTreeMap<ClassId, Vec<u64>>) -> bool {
    a.iter().all(|(c, xs)| xs.iter().all(|x| b[c].contains(x)))
}

fn cs_thresholds() -> String {
    let mut rng = SplitMix64::new(0xc5);
    for t in 0..200 {
        let mut items = BTreeMap::new();
        let mut seq = 0;
        for c in 0..rng.range_inclusive(1, 3) {
            let n = rng.range_inclusive(1, 60);
            let quantized = rng.chance(0.5);
            let v = (0..n)
                .map(|_| {
                    seq += 1 + rng.below(3);
                    let s = if quantized {
                        rng.below(21) as f64 / 20.0
                    } else {
                        rng.next_f64()
                    };
                    (s, seq)
                })
                .collect();
            items.insert(ClassId(c as u8 + 3), v);
        }
        let trial = Trial {
            items,
            fix_step: rng.below(20) as u32,
            per_pct: rng.range_inclusive(1, 99) as u32,
        };
        let base = admitted(&trial, trial.fix_step, trial.per_pct);
        let higher_fix = admitted(&trial, trial.fix_step + 1, trial.per_pct);
        let higher_per = admitted(&trial, trial.fix_step, trial.per_pct + 1);
        assert!(
            subset(&higher_fix, &base),
            "trial {t}: raising the fixed cutoff admitted more"
        );
        assert!(
            subset(&base, &higher_per),
            "trial {t}: raising the percentile admitted less"
        );
    }
    "200 trials match brute-force max(fixed, percentile) and are monotone".into()
}

// ---------------------------------------------------------------- disjointness

fn disjointness() -> String {
    let classes = synth::default_palette();
    let things = classes.things();
    let samples = synth::generate_dataset(
        17,
        1000,
        &SceneConfig::default(),
        &NoiseConfig::typical(),
        &classes,
    )
    .unwrap();
    let (data, _) = synth::into_datasets(samples, &classes);
    let stats = pipeline::dataset_stats(&data).unwrap();
    let mut checked = 0;
    for cfg in [
        PipelineConfig::default(),
        PipelineConfig {
            instance: ThresholdParams::new(0.8, 0.1),
            amodal: ThresholdParams::new(0.9, 0.2),
            ..PipelineConfig::default()
        },
    ] {
        let th = pipeline::compute_thresholds(&stats, &cfg, &classes).unwrap();
        for (i, s) in data.samples.iter().enumerate() {
            let label = generate_omni_pseudo_label(&s.predictions, i as u64, &th, &things).unwrap();
            for b in [&label.instance, &label.amodal] {
                for o in &b.certain {
                    assert!(
                        o.mask.is_disjoint(&b.uncertain).unwrap(),
                        "image {i}: certain mask meets uncertain region"
                    );
                }
            }
            assert_eq!(label.semantic.count(PixelLabel::Ignore), 0);
            checked += 1;
        }
    }

    let car = ClassId(3);
    let obj = |rows: &[&str], score, seq| {
        InstancePrediction::new(car, score, BinaryMask::from_rows(rows), seq).unwrap()
    };
    let a = obj(&["1111", "1111", "1111", "1111"], 0.9, 1);
    let b = obj(&["0000", "0110", "0110", "0000"], 0.2, 2);
    let region = compute_uncertain_region(4, 4, &[a.clone(), b], std::slice::from_ref(&a)).unwrap();
    assert!(
        region.is_empty(),
        "rejected object inside a certain one left uncertain pixels"
    );
    let a = obj(&["1100", "0000", "0000", "0000"], 0.9, 1);
    let b = obj(&["0000", "0000", "0011", "0010"], 0.2, 2);
    let region = compute_uncertain_region(4, 4, &[a.clone(), b.clone()], &[a]).unwrap();
    assert_eq!(region, b.mask);
    format!("{checked} labeled scenes disjoint, covered rejection yields empty region")
}

// ---------------------------------------------------------------- loss gradients

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-5 * analytic.abs().max(numeric.abs())
}

fn loss_gradients() -> String {
    const H: f64 = 1e-5;
    let mut rng = SplitMix64::new(0x9a);
    let mut compared = 0;
    for g in 0..50 {
        let values: Vec<f64> = (0..64).map(|_| 0.02 + 0.96 * rng.next_f64()).collect();
        let target = BinaryMask::from_fn(8, 8, |_, _| rng.chance(0.5));
        let uncertain = BinaryMask::from_fn(8, 8, |_, _| rng.chance(0.3));
        let bce = |v: &[f64]| {
            uncertainty_guided_bce(&ProbGrid::new(8, 8, v.to_vec()), &target, &uncertain).unwrap()
        };
        let out = bce(&values);
        for i in 0..64 {
            let mut up = values.clone();
            let mut down = values.clone();
            up[i] += H;
            down[i] -= H;
            let numeric = (bce(&up).loss - bce(&down).loss) / (2.0 * H);
            assert!(
                close(out.gradient[i], numeric),
                "grid {g} pixel {i}: BCE {} vs {numeric}",
                out.gradient[i]
            );
            compared += 1;
        }

        let c = 4;
        let probs: Vec<f64> = (0..64 * c).map(|_| 0.02 + 0.96 * rng.next_f64()).collect();
        let codes: Vec<u8> = (0..64)
            .map(|_| match rng.below(6) {
                4 => 254,
                5 => 255,
                k => k as u8,
            })
            .collect();
        let labels = LabelMap::from_codes(8, 8, codes);
        let ce = |p: &[f64]| {
            masked_cross_entropy(
                &SemanticPrediction::new_unchecked(8, 8, c, p.to_vec()).unwrap(),
                &labels,
            )
            .unwrap()
        };
        let out = ce(&probs);
        for i in 0..probs.len() {
            let mut up = probs.clone();
            let mut down = probs.clone();
            up[i] += H;
            down[i] -= H;
            let numeric = (ce(&up).loss - ce(&down).loss) / (2.0 * H);
            assert!(
                close(out.gradient[i], numeric),
                "grid {g} entry {i}: CE {} vs {numeric}",
                out.gradient[i]
            );
            compared += 1;
        }
    }
    let p = ProbGrid::new(8, 8, vec![0.3; 64]);
    let all = BinaryMask::full(8, 8);
    let out = uncertainty_guided_bce(&p, &BinaryMask::new(8, 8), &all).unwrap();
    assert_eq!(out.loss, 0.0);
    assert!(out.gradient.iter().all(|&g| g == 0.0));
    format!("{compared} partials within 1e-5 relative error, all-uncertain loss is 0")
}

// ---------------------------------------------------------------- mixing

fn mixing_invariants() -> String {
    let classes = synth::default_palette();
    let samples = synth::generate_dataset(
        99,
        24,
        &SceneConfig::default(),
        &NoiseConfig::typical(),
        &classes,
    )
    .unwrap();
    let (data, _) = synth::into_datasets(samples, &classes);
    let cfg = PipelineConfig::default();
    let stats = pipeline::dataset_stats(&data).unwrap();
    let th = pipeline::compute_thresholds(&stats, &cfg, &classes).unwrap();
    let strict = pipeline::strict_thresholds(&stats, &cfg, &classes).unwrap();
    let labels = pipeline::pseudo_label_dataset(&data, &th).unwrap();
    let pool = pipeline::build_pool(&data, &strict, cfg.pool_capacity).unwrap();
    assert!(pool.len() >= 3, "pool too small: {}", pool.len());
    for (k, o) in pool.objects().iter().enumerate() {
        assert!(
            o.overlap_mask.is_subset_of(&o.full_mask).unwrap(),
            "pool object {k}"
        );
        assert!(
            2 * o.overlap_mask.area() < o.full_mask.area(),
            "pool object {k} breaks the half rule"
        );
    }

    let mut pastes = 0;
    for m in 0..500u64 {
        let base = &labels.samples[m as usize % labels.samples.len()];
        let r = 1 + (m as usize % 12);
        let mixed = spatial_aware_mix(&base.image, &base.labels, &pool, r, m).unwrap();
        assert_eq!(
            mixed,
            spatial_aware_mix(&base.image, &base.labels, &pool, r, m).unwrap(),
            "mix {m} not deterministic"
        );
        let (h, w) = base.image.dims();
        let picks: Vec<_> = mixed
            .paste_log
            .iter()
            .map(|p| &pool.objects()[p.object])
            .collect();
        let union = BinaryMask::union_all(h, w, picks.iter().map(|o| &o.full_mask)).unwrap();
        for i in 0..h * w {
            if !union.get_index(i) {
                assert_eq!(
                    mixed.image.pixel(i),
                    base.image.pixel(i),
                    "mix {m}: pixel {i} changed outside pastes"
                );
                assert_eq!(
                    mixed.labels.semantic.get(i),
                    base.labels.semantic.get(i),
                    "mix {m}: label {i}"
                );
            }
        }
        for (k, (rec, o)) in mixed.paste_log.iter().zip(&picks).enumerate() {
            let behind =
                BinaryMask::union_all(h, w, picks[k + 1..].iter().map(|o| &o.full_mask)).unwrap();
            let visible = o.full_mask.diff(&behind).unwrap();
            let expected = if visible.is_empty() {
                PasteOutcome::RemovedFullyOccluded
            } else {
                PasteOutcome::Kept
            };
            assert_eq!(rec.outcome, expected, "mix {m} paste {k}");
            let seq = PASTE_SEQ_BASE + k as u64;
            let inst = mixed
                .labels
                .instance
                .certain
                .iter()
                .find(|p| p.object_seq == seq);
            let amodal = mixed
                .labels
                .amodal
                .certain
                .iter()
                .find(|p| p.object_seq == seq);
            if expected == PasteOutcome::RemovedFullyOccluded {
                assert!(
                    inst.is_none() && amodal.is_none(),
                    "mix {m}: removed paste {k} kept labels"
                );
                continue;
            }
            pastes += 1;
            let (inst, amodal) = (inst.unwrap(), amodal.unwrap());
            assert_eq!(amodal.mask, o.full_mask, "mix {m} paste {k}: amodal label");
            assert_eq!(inst.mask, visible, "mix {m} paste {k}: instance label");
            assert!(inst.mask.is_subset_of(&amodal.mask).unwrap());
            for i in visible.ones() {
                if o.overlap_mask.get_index(i) {
                    assert!(
                        mixed.image.pixel(i).iter().all(|&v| v == 0),
                        "mix {m}: overlap pixel {i} not zero"
                    );
                    assert_eq!(mixed.labels.semantic.get(i), PixelLabel::Uncertain);
                } else {
                    assert_eq!(
                        mixed.image.pixel(i),
                        o.source_pixel(i),
                        "mix {m}: pasted pixel {i}"
                    );
                    assert_eq!(mixed.labels.semantic.get(i), PixelLabel::Certain(o.class));
                }
            }
        }
        for b in [&mixed.labels.instance, &mixed.labels.amodal] {
            assert!(
                b.uncertain.is_disjoint(&union).unwrap(),
                "mix {m}: uncertain region under pastes"
            );
        }
    }
    format!(
        "500 mixes over a {}-object pool, {pastes} visible pastes checked",
        pool.len()
    )
}

// ---------------------------------------------------------------- PQ oracle

const ROAD: u8 = 0;
const SKY: u8 = 1;

fn pq_classes() -> ClassTable {
    ClassTable::from_pairs([
        ("road", ClassKind::Stuff),
        ("sky", ClassKind::Stuff),
        ("car", ClassKind::Thing),
        ("person", ClassKind::Thing),
    ])
    .unwrap()
}

/// Cell values 0 and 1 are stuff; 2, 3 and 4 are thing segments 1 to 3,
/// the first two cars and the third a person.
#[derive(Clone)]
struct Scene {
    h: usize,
    w: usize,
    cells: Vec<u8>,
    amodal: BTreeMap<u32, BinaryMask>,
}

fn segment_class(id: u32) -> ClassId {
    if id == 3 {
        ClassId(3)
    } else {
        ClassId(2)
    }
}

impl Scene {
    fn segments(&self) -> Vec<(u32, BinaryMask)> {
        (1..=3u32)
            .map(|id| {
                let m = BinaryMask::from_fn(self.h, self.w, |y, x| {
                    self.cells[y * self.w + x] as u32 == id + 1
                });
                (id, m)
            })
            .filter(|(_, m)| !m.is_empty())
            .collect()
    }

    fn panoptic(&self) -> PanopticMap {
        let codes = self
            .cells
            .iter()
            .map(|&v| {
                if v <= SKY {
                    v
                } else {
                    segment_class(v as u32 - 1).0
                }
            })
            .collect();
        let segments = self
            .segments()
            .into_iter()
            .map(|(id, visible)| Segment {
                id,
                class: segment_class(id),
                score: 1.0,
                amodal: self.amodal.get(&id).cloned(),
                visible,
            })
            .collect();
        PanopticMap::new(LabelMap::from_codes(self.h, self.w, codes), segments).unwrap()
    }

    /// Oracle segments per class: stuff from cells, things in id order.
    fn oracle_segments(&self, mode: PqMode) -> BTreeMap<ClassId, Vec<BinaryMask>> {
        let mut out: BTreeMap<ClassId, Vec<BinaryMask>> = BTreeMap::new();
        for stuff in [ROAD, SKY] {
            let m = BinaryMask::from_fn(self.h, self.w, |y, x| self.cells[y * self.w + x] == stuff);
            if !m.is_empty() {
                out.entry(ClassId(stuff)).or_default().push(m);
            }
        }
        for (id, visible) in self.segments() {
            let mask = match (mode, self.amodal.get(&id)) {
                (PqMode::Amodal, Some(a)) => a.clone(),
                _ => visible,
            };
            out.entry(segment_class(id)).or_default().push(mask);
        }
        out
    }
}

/// Exact sum of fractions.
#[derive(Clone, Copy)]
struct Ratio(u128, u128);

impl Ratio {
    fn add(self, n: usize, d: usize) -> Ratio {
        let (n, d) = (n as u128, d as u128);
        Ratio(self.0 * d + n * self.1, self.1 * d)
    }

    fn cmp(self, o: Ratio) -> std::cmp::Ordering {
        (self.0 * o.1).cmp(&(o.0 * self.1))
    }
}

/// Every injective partial assignment of ground truth to predictions made
/// only of pairs with IoU above one half. Returns the assignments with the
/// most pairs and, among those, the largest exact IoU sum.
fn best_assignments(gt: &[BinaryMask], pred: &[BinaryMask]) -> Vec<Vec<Option<usize>>> {
    fn go(
        i: usize,
        gt: &[BinaryMask],
        pred: &[BinaryMask],
        used: &mut Vec<bool>,
        cur: &mut Vec<Option<usize>>,
        all: &mut Vec<(usize, Ratio, Vec<Option<usize>>)>,
    ) {
        if i == gt.len() {
            let mut sum = Ratio(0, 1);
            for (g, p) in cur.iter().enumerate() {
                if let Some(j) = p {
                    let inter = gt[g].intersection_area(&pred[*j]).unwrap();
                    sum = sum.add(inter, gt[g].union_area(&pred[*j]).unwrap());
                }
            }
            all.push((cur.iter().flatten().count(), sum, cur.clone()));
            return;
        }
        cur.push(None);
        go(i + 1, gt, pred, used, cur, all);
        cur.pop();
        for j in 0..pred.len() {
            if used[j] {
                continue;
            }
            let inter = gt[i].intersection_area(&pred[j]).unwrap();
            let union = gt[i].union_area(&pred[j]).unwrap();
            if 2 * inter <= union {
                continue;
            }
            used[j] = true;
            cur.push(Some(j));
            go(i + 1, gt, pred, used, cur, all);
            cur.pop();
            used[j] = false;
        }
    }
    let mut all = Vec::new();
    go(
        0,
        gt,
        pred,
        &mut vec![false; pred.len()],
        &mut Vec::new(),
        &mut all,
    );
    let best = all
        .iter()
        .max_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(b.1)))
        .map(|b| (b.0, b.1))
        .unwrap();
    all.into_iter()
        .filter(|a| a.0 == best.0 && a.1.cmp(best.1).is_eq())
        .map(|a| a.2)
        .collect()
}

/// Per class: every PQ value an optimal assignment can produce, plus
/// (tp, fp, fn).
type OracleClass = (Vec<f64>, (u64, u64, u64));

fn oracle_pq(pred: &Scene, gt: &Scene, mode: PqMode) -> BTreeMap<ClassId, OracleClass> {
    let ps = pred.oracle_segments(mode);
    let gs = gt.oracle_segments(mode);
    let empty = Vec::new();
    let mut per_class = BTreeMap::new();
    for c in ps.keys().chain(gs.keys()) {
        let p = ps.get(c).unwrap_or(&empty);
        let g = gs.get(c).unwrap_or(&empty);
        let options = best_assignments(g, p);
        let tp = options[0].iter().flatten().count() as u64;
        let fp = p.len() as u64 - tp;
        let fn_ = g.len() as u64 - tp;
        let denom = tp as f64 + 0.5 * (fp + fn_) as f64;
        let values = options
            .iter()
            .map(|assign| {
                let mut iou_sum = 0.0;
                for (gi, pj) in assign.iter().enumerate() {
                    if let Some(j) = pj {
                        let inter = g[gi].intersection_area(&p[*j]).unwrap();
                        iou_sum += inter as f64 / g[gi].union_area(&p[*j]).unwrap() as f64;
                    }
                }
                iou_sum / denom
            })
            .collect();
        per_class.insert(*c, (values, (tp, fp, fn_)));
    }
    per_class
}

fn check_pq(pred: &Scene, gt: &Scene, mode: PqMode, classes: &ClassTable) {
    let got = compute_pq(&pred.panoptic(), &gt.panoptic(), mode, classes).unwrap();
    let want = oracle_pq(pred, gt, mode);
    let fail = |why: String| -> ! {
        panic!(
            "{mode:?} on gt {:?} / pred {:?}: {why}",
            gt.cells, pred.cells
        )
    };
    if got.per_class.keys().ne(want.keys()) {
        fail(format!(
            "classes {:?} vs oracle {:?}",
            got.per_class.keys(),
            want.keys()
        ));
    }
    for (c, (values, counts)) in &want {
        let s = &got.per_class[c];
        let k = s.counts.as_ref().unwrap();
        if (k.tp, k.fp, k.fn_) != *counts || !values.contains(&s.value) {
            fail(format!(
                "class {}: got {} {:?}, oracle {values:?} {counts:?}",
                c.0,
                s.value,
                (k.tp, k.fp, k.fn_)
            ));
        }
    }
    let mean = (!want.is_empty())
        .then(|| got.per_class.values().map(|s| s.value).sum::<f64>() / want.len() as f64);
    if got.mean != mean {
        fail(format!("mean {:?} vs {mean:?}", got.mean));
    }
}

fn all_grids(h: usize, w: usize, alphabet: &[u8]) -> Vec<Scene> {
    let n = h * w;
    let total = alphabet.len().pow(n as u32);
    (0..total)
        .map(|mut code| {
            let cells = (0..n)
                .map(|_| {
                    let v = alphabet[code % alphabet.len()];
                    code /= alphabet.len();
                    v
                })
                .collect();
            Scene {
                h,
                w,
                cells,
                amodal: BTreeMap::new(),
            }
        })
        .collect()
}

fn random_scene(rng: &mut SplitMix64, rects: &[(usize, usize, usize, usize)]) -> Scene {
    let (h, w) = (6, 6);
    let split = rng.range_inclusive(0, h);
    let mut cells: Vec<u8> = (0..h * w)
        .map(|i| if i / w < split { SKY } else { ROAD })
        .collect();
    let mut amodal = BTreeMap::new();
    for (k, &(y0, x0, y1, x1)) in rects.iter().enumerate() {
        let full = BinaryMask::rect(h, w, y0, x0, y1, x1);
        for i in full.ones() {
            cells[i] = k as u8 + 2;
        }
        amodal.insert(k as u32 + 1, full);
    }
    let mut scene = Scene {
        h,
        w,
        cells,
        amodal,
    };
    let live: Vec<u32> = scene.segments().iter().map(|(id, _)| *id).collect();
    scene.amodal.retain(|id, _| live.contains(id));
    scene
}

fn random_rect(rng: &mut SplitMix64) -> (usize, usize, usize, usize) {
    let y0 = rng.range_inclusive(0, 4);
    let x0 = rng.range_inclusive(0, 4);
    (
        y0,
        x0,
        rng.range_inclusive(y0 + 1, 6),
        rng.range_inclusive(x0 + 1, 6),
    )
}

fn jitter(rng: &mut SplitMix64, r: (usize, usize, usize, usize)) -> (usize, usize, usize, usize) {
    let mut shift = |v: usize, lo: usize, hi: usize| {
        (v as i64 + rng.below(3) as i64 - 1).clamp(lo as i64, hi as i64) as usize
    };
    let y0 = shift(r.0, 0, 5);
    let x0 = shift(r.1, 0, 5);
    let y1 = shift(r.2, y0 + 1, 6);
    let x1 = shift(r.3, x0 + 1, 6);
    (y0, x0, y1, x1)
}

fn pq_oracle() -> String {
    let classes = pq_classes();
    let mut pairs = 0;
    for (h, w, alphabet) in [
        (2, 2, &[0u8, 2, 3, 4][..]),
        (1, 4, &[0, 2, 3, 4]),
        (1, 3, &[0, 1, 2, 3, 4]),
    ] {
        let grids = all_grids(h, w, alphabet);
        for gt in &grids {
            for pred in &grids {
                check_pq(pred, gt, PqMode::Visible, &classes);
                pairs += 1;
            }
        }
    }
    let mut rng = SplitMix64::new(0x90);
    for _ in 0..4000 {
        let n = rng.range_inclusive(0, 3);
        let gt_rects: Vec<_> = (0..n).map(|_| random_rect(&mut rng)).collect();
        let pred_rects: Vec<_> = if rng.chance(0.7) {
            gt_rects.iter().map(|&r| jitter(&mut rng, r)).collect()
        } else {
            (0..rng.range_inclusive(0, 3))
                .map(|_| random_rect(&mut rng))
                .collect()
        };
        let gt = random_scene(&mut rng, &gt_rects);
        let pred = random_scene(&mut rng, &pred_rects);
        check_pq(&pred, &gt, PqMode::Visible, &classes);
        check_pq(&pred, &gt, PqMode::Amodal, &classes);
        pairs += 2;
    }
    format!("{pairs} scene pairs agree exactly (all 2x2, 1x4, 1x3 grids and 4000 random 6x6 pairs)")
}

// ---------------------------------------------------------------- fixed point

fn zero_noise_fixed_point() -> String {
    let classes = synth::default_palette();
    for seed in 0..20 {
        let samples = synth::generate_dataset(
            seed,
            3,
            &SceneConfig::default(),
            &NoiseConfig::zero(),
            &classes,
        )
        .unwrap();
        let (data, gt) = synth::into_datasets(samples, &classes);
        let out = pipeline::run_pipeline(&data, Some(&gt), &PipelineConfig::default()).unwrap();
        for (name, mean) in out.report.unwrap().means() {
            assert_eq!(mean, Some(1.0), "seed {seed}: {name}");
            assert_eq!(mean.map(|m| m * 100.0), Some(100.0));
        }
    }
    "20 seeds score 100.0 on all five means".into()
}

// ---------------------------------------------------------------- rare class

fn fixed_only(th: &CsThresholds) -> CsThresholds {
    let strip = |b: &BranchThresholds| BranchThresholds {
        branch: b.branch,
        params: b.params,
        classes: BTreeMap::new(),
    };
    CsThresholds {
        semantic: strip(&th.semantic),
        instance: strip(&th.instance),
        amodal: strip(&th.amodal),
    }
}

fn cs_vs_fixed_recall() -> String {
    let classes = synth::default_palette();
    let things = classes.things();
    let scene = SceneConfig {
        guaranteed: vec![RIDER],
        ..SceneConfig::default()
    };
    let noise = NoiseConfig::rare_class(RIDER);
    let cfg = PipelineConfig::default();
    let mut recovered = 0;
    for seed in 0..20 {
        let samples = synth::generate_dataset(seed, 1, &scene, &noise, &classes).unwrap();
        let (data, _) = synth::into_datasets(samples, &classes);
        let preds = &data.samples[0].predictions;
        let riders = |objs: &[InstancePrediction]| objs.iter().filter(|o| o.class == RIDER).count();
        assert!(
            riders(&preds.instance) > 0 && riders(&preds.amodal) > 0,
            "seed {seed}: no rider predicted"
        );
        for (objs, fix) in [
            (&preds.instance, cfg.instance.fix),
            (&preds.amodal, cfg.amodal.fix),
        ] {
            assert!(
                objs.iter()
                    .filter(|o| o.class == RIDER)
                    .all(|o| o.score < fix),
                "seed {seed}: rider scores reach the fixed cutoff"
            );
        }
        let stats = pipeline::dataset_stats(&data).unwrap();
        let th = pipeline::compute_thresholds(&stats, &cfg, &classes).unwrap();
        let cs = generate_omni_pseudo_label(preds, 0, &th, &things).unwrap();
        let fixed = generate_omni_pseudo_label(preds, 0, &fixed_only(&th), &things).unwrap();
        let (ci, ca) = (riders(&cs.instance.certain), riders(&cs.amodal.certain));
        let (fi, fa) = (
            riders(&fixed.instance.certain),
            riders(&fixed.amodal.certain),
        );
        assert!(
            ci >= 1 && ca >= 1,
            "seed {seed}: class-wise thresholds kept {ci} instance / {ca} amodal riders"
        );
        assert!(
            fi == 0 && fa == 0,
            "seed {seed}: fixed thresholds kept {fi} / {fa} riders"
        );
        recovered += ci + ca;
    }
    format!("20/20 images recover riders ({recovered} certain rider labels) where fixed cutoffs keep none")
}

// ---------------------------------------------------------------- config

fn config_fidelity() -> String {
    let v = serde_json::to_value(PipelineConfig::default()).unwrap();
    let pair = |k: &str| (v[k]["fix"].as_f64().unwrap(), v[k]["per"].as_f64().unwrap());
    assert_eq!(pair("amodal"), (0.3, 0.5));
    assert_eq!(pair("instance"), (0.5, 0.3));
    assert_eq!(pair("semantic"), (0.5, 0.8));
    assert_eq!(pair("strict"), (0.95, 0.1));
    assert_eq!(v["r"].as_u64(), Some(10));
    assert_eq!(
        PipelineConfig::from_json("{}").unwrap(),
        PipelineConfig::default()
    );
    let text = PipelineConfig::default().to_json();
    assert_eq!(
        PipelineConfig::from_json(&text).unwrap(),
        PipelineConfig::default()
    );
    "amodal 0.3/0.5, instance 0.5/0.3, semantic 0.5/0.8, strict 0.95/0.1, R = 10".into()
}
