//! Accuracy and fairness metrics.
//!
//! The selection rate is `min_c acc_c / max_c acc_c` over per-class
//! accuracies; a value of at least 0.80 counts as mitigated bias. Gaps are in
//! percentage points.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::GroupKey;
use crate::{Error, Result};

/// Threshold of the 80% rule, inclusive.
pub const EIGHTY_PERCENT_RULE: f64 = 0.80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub true_class: u8,
    pub predicted_class: u8,
    pub confidence: f64,
    pub group: GroupKey,
}

impl PredictionRecord {
    pub fn correct(&self) -> bool {
        self.true_class == self.predicted_class
    }
}

pub fn accuracy(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("accuracy over zero records".into()));
    }
    let correct = records.iter().filter(|r| r.correct()).count();
    Ok(correct as f64 / records.len() as f64)
}

/// Accuracy restricted to each true class that occurs in `records`.
pub fn per_class_accuracy(records: &[PredictionRecord]) -> BTreeMap<u8, f64> {
    let mut tally: BTreeMap<u8, (usize, usize)> = BTreeMap::new();
    for r in records {
        let t = tally.entry(r.true_class).or_default();
        t.1 += 1;
        if r.correct() {
            t.0 += 1;
        }
    }
    tally
        .into_iter()
        .map(|(c, (ok, n))| (c, ok as f64 / n as f64))
        .collect()
}

/// `min / max` over the given accuracies.
pub fn selection_rate(per_class_accuracy: &BTreeMap<u8, f64>) -> Result<f64> {
    if per_class_accuracy.len() < 2 {
        return Err(Error::Contract(format!(
            "selection rate needs at least two classes, got {}",
            per_class_accuracy.len()
        )));
    }
    let max = per_class_accuracy
        .values()
        .copied()
        .fold(f64::MIN, f64::max);
    let min = per_class_accuracy
        .values()
        .copied()
        .fold(f64::MAX, f64::min);
    if max <= 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(min / max)
}

pub fn passes_80_rule(selection_rate: f64) -> bool {
    selection_rate >= EIGHTY_PERCENT_RULE
}

/// `(max − min) × 100` of the accuracies.
pub fn gap_pp(per_class_accuracy: &BTreeMap<u8, f64>) -> f64 {
    let max = per_class_accuracy
        .values()
        .copied()
        .fold(f64::MIN, f64::max);
    let min = per_class_accuracy
        .values()
        .copied()
        .fold(f64::MAX, f64::min);
    if per_class_accuracy.is_empty() {
        0.0
    } else {
        (max - min) * 100.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub overall_accuracy: f64,
    pub per_class_accuracy: BTreeMap<u8, f64>,
    /// group → class → accuracy.
    pub per_group_accuracy: BTreeMap<String, BTreeMap<u8, f64>>,
    pub selection_rate: f64,
    pub gap_pp: f64,
    pub passes_80_rule: bool,
}

impl FairnessReport {
    pub fn from_records(records: &[PredictionRecord]) -> Result<Self> {
        let overall_accuracy = accuracy(records)?;
        let per_class = per_class_accuracy(records);
        let sr = selection_rate(&per_class)?;
        let mut by_group: BTreeMap<String, Vec<PredictionRecord>> = BTreeMap::new();
        for r in records {
            by_group
                .entry(r.group.group_attr.clone())
                .or_default()
                .push(r.clone());
        }
        Ok(Self {
            overall_accuracy,
            gap_pp: gap_pp(&per_class),
            per_class_accuracy: per_class,
            per_group_accuracy: by_group
                .into_iter()
                .map(|(g, rs)| (g, per_class_accuracy(&rs)))
                .collect(),
            selection_rate: sr,
            passes_80_rule: passes_80_rule(sr),
        })
    }

    pub fn class_accuracy(&self, class: u8) -> f64 {
        self.per_class_accuracy
            .get(&class)
            .copied()
            .unwrap_or(f64::NAN)
    }

    /// `key = value` lines, every key prefixed with `prefix`.
    pub fn to_key_values(&self, prefix: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{prefix}overall_accuracy = {:.6}",
            self.overall_accuracy
        );
        for (c, a) in &self.per_class_accuracy {
            let _ = writeln!(out, "{prefix}accuracy_class{c} = {a:.6}");
        }
        for (g, per_class) in &self.per_group_accuracy {
            for (c, a) in per_class {
                let _ = writeln!(out, "{prefix}group.{g}.accuracy_class{c} = {a:.6}");
            }
        }
        let _ = writeln!(out, "{prefix}selection_rate = {:.6}", self.selection_rate);
        let _ = writeln!(out, "{prefix}gap_pp = {:.4}", self.gap_pp);
        let _ = writeln!(out, "{prefix}passes_80_rule = {}", self.passes_80_rule);
        out
    }
}

/// Reduction of the accuracy gap in percentage points. Negative when the
/// treated model is more biased than the baseline.
pub fn gap_reduction(baseline: &FairnessReport, treated: &FairnessReport) -> f64 {
    baseline.gap_pp - treated.gap_pp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub group: String,
    pub per_class_accuracy: BTreeMap<u8, f64>,
    /// `None` when fewer than two classes occur in the group or every class
    /// accuracy is zero.
    pub selection_rate: Option<f64>,
}

pub fn group_report(records: &[PredictionRecord], group_attr: &str) -> Result<GroupReport> {
    let subset: Vec<PredictionRecord> = records
        .iter()
        .filter(|r| r.group.group_attr == group_attr)
        .cloned()
        .collect();
    if subset.is_empty() {
        return Err(Error::AbsentGroup(group_attr.to_string()));
    }
    let per_class = per_class_accuracy(&subset);
    Ok(GroupReport {
        group: group_attr.to_string(),
        selection_rate: selection_rate(&per_class).ok(),
        per_class_accuracy: per_class,
    })
}
