//! Class-wise self-tuning thresholds.
//!
//! For each class two admission counts are compared over the whole dataset:
//! objects scoring strictly above a fixed cutoff, and the top fraction of
//! that class's score-ranked objects. The rule admitting more objects wins;
//! ties go to the fixed cutoff.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::prediction::{Branch, InstancePrediction};
use crate::class::ClassId;
use crate::error::{Error, Result};

/// A `(fixed cutoff, top fraction)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub fix: f64,
    pub per: f64,
}

impl ThresholdParams {
    pub const fn new(fix: f64, per: f64) -> Self {
        ThresholdParams { fix, per }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fix) {
            return Err(Error::ConfigInvalid(format!(
                "fixed threshold {} outside [0, 1]",
                self.fix
            )));
        }
        if !(self.per > 0.0 && self.per <= 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "percentile {} outside (0, 1]",
                self.per
            )));
        }
        Ok(())
    }

    /// `ceil(per * n)`, snapping products within 1e-9 of an integer so that
    /// e.g. `0.3 * 10` yields 3 rather than 4.
    pub fn percentile_count(&self, n: usize) -> usize {
        let x = self.per * n as f64;
        let r = x.round();
        let k = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
        (k as usize).min(n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredItem {
    pub score: f64,
    pub seq: u64,
}

/// Per-class score lists collected across a dataset. Merging is
/// associative and commutative: lists are only ordered when thresholds
/// are computed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreStats {
    per_class: BTreeMap<ClassId, Vec<ScoredItem>>,
}

impl ScoreStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, class: ClassId, score: f64, seq: u64) {
        self.per_class
            .entry(class)
            .or_default()
            .push(ScoredItem { score, seq });
    }

    pub fn extend_predictions<'a>(
        &mut self,
        preds: impl IntoIterator<Item = &'a InstancePrediction>,
    ) {
        for p in preds {
            self.push(p.class, p.score, p.object_seq);
        }
    }

    pub fn merge(mut self, other: ScoreStats) -> ScoreStats {
        for (class, mut items) in other.per_class {
            self.per_class.entry(class).or_default().append(&mut items);
        }
        self
    }

    pub fn total(&self) -> usize {
        self.per_class.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.per_class.keys().copied()
    }

    /// Scores of one class sorted descending, ties by ascending `seq`.
    pub fn ranked(&self, class: ClassId) -> Vec<ScoredItem> {
        let mut items = self.per_class.get(&class).cloned().unwrap_or_default();
        items.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.seq.cmp(&b.seq)));
        items
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Fixed,
    Percentile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassThreshold {
    pub rule: Rule,
    pub cutoff: f64,
    pub admitted_count: usize,
    pub fixed_count: usize,
    pub percentile_count: usize,
    pub total: usize,
    /// Last admitted `seq` among objects scoring exactly `cutoff`
    /// (percentile rule only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_seq: Option<u64>,
}

impl ClassThreshold {
    pub fn admits(&self, score: f64, seq: u64) -> bool {
        match self.rule {
            Rule::Fixed => score > self.cutoff,
            Rule::Percentile => {
                score > self.cutoff
                    || (score == self.cutoff && self.boundary_seq.is_some_and(|b| seq <= b))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchThresholds {
    pub branch: Branch,
    pub params: ThresholdParams,
    pub classes: BTreeMap<ClassId, ClassThreshold>,
}

impl BranchThresholds {
    /// Classes without statistics fall back to the fixed cutoff.
    pub fn admits(&self, class: ClassId, score: f64, seq: u64) -> bool {
        match self.classes.get(&class) {
            Some(t) => t.admits(score, seq),
            None => score > self.params.fix,
        }
    }

    pub fn expect_branch(&self, branch: Branch) -> Result<()> {
        if self.branch != branch {
            return Err(Error::BranchMismatch {
                expected: branch.as_str(),
                found: self.branch.as_str(),
            });
        }
        Ok(())
    }

    pub fn admitted_total(&self) -> usize {
        self.classes.values().map(|t| t.admitted_count).sum()
    }

    /// True when no class saw any prediction.
    pub fn is_empty(&self) -> bool {
        self.classes.values().all(|t| t.total == 0)
    }
}

/// Thresholds for all three branches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsThresholds {
    pub semantic: BranchThresholds,
    pub instance: BranchThresholds,
    pub amodal: BranchThresholds,
}

impl CsThresholds {
    pub fn get(&self, branch: Branch) -> &BranchThresholds {
        match branch {
            Branch::Semantic => &self.semantic,
            Branch::Instance => &self.instance,
            Branch::Amodal => &self.amodal,
        }
    }
}

pub fn class_threshold(ranked: &[ScoredItem], params: ThresholdParams) -> ClassThreshold {
    let total = ranked.len();
    let fixed_count = ranked.iter().filter(|s| s.score > params.fix).count();
    let k = params.percentile_count(total);
    if k > fixed_count {
        let boundary = ranked[k - 1];
        ClassThreshold {
            rule: Rule::Percentile,
            cutoff: boundary.score,
            admitted_count: k,
            fixed_count,
            percentile_count: k,
            total,
            boundary_seq: Some(boundary.seq),
        }
    } else {
        ClassThreshold {
            rule: Rule::Fixed,
            cutoff: params.fix,
            admitted_count: fixed_count,
            fixed_count,
            percentile_count: k,
            total,
            boundary_seq: None,
        }
    }
}

/// Computes one branch's thresholds from dataset-wide statistics.
///
/// `classes` lists every class that should appear in the output, including
/// ones with no predictions (they get an empty fixed-rule entry).
pub fn compute_cs_thresholds(
    branch: Branch,
    stats: &ScoreStats,
    params: ThresholdParams,
    classes: impl IntoIterator<Item = ClassId>,
) -> Result<BranchThresholds> {
    params.validate()?;
    let mut wanted: Vec<ClassId> = classes.into_iter().chain(stats.classes()).collect();
    wanted.sort();
    wanted.dedup();
    let classes = wanted
        .into_iter()
        .map(|c| (c, class_threshold(&stats.ranked(c), params)))
        .collect();
    Ok(BranchThresholds {
        branch,
        params,
        classes,
    })
}
