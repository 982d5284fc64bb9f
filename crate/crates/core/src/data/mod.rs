//! Dataset model, synthetic generation, skewed subsetting and CSV ingestion.

mod csv_io;
mod skew;
mod synthetic;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use csv_io::{load_csv, write_csv, CsvSchema};
pub use skew::{apply_skew, curate_balanced_test, SkewSpec};
pub use synthetic::{generate_pool, CellSpec, GroupProfile, PoolSpec, SyntheticSpec};

/// Demographic metadata of a sample.
///
/// `class_attr` is the binary attribute the classifier predicts; `group_attr`
/// is the subgroup the fairness audit slices by. Neither is visible to the
/// learner; training only sees `Sample::label`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub class_attr: u8,
    pub group_attr: String,
}

impl GroupKey {
    pub fn new(class_attr: u8, group_attr: impl Into<String>) -> Self {
        Self {
            class_attr,
            group_attr: group_attr.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub features: Vec<f64>,
    /// Training label. `None` for unlabeled pool members.
    pub label: Option<u8>,
    pub group: GroupKey,
}

impl Sample {
    /// Copy of the sample with its label removed.
    pub fn unlabeled(&self) -> Sample {
        Sample {
            label: None,
            ..self.clone()
        }
    }
}

/// Count of samples per (class, group) cell, keyed by `GroupKey`.
pub fn cell_counts(samples: &[Sample]) -> BTreeMap<GroupKey, usize> {
    let mut counts = BTreeMap::new();
    for s in samples {
        *counts.entry(s.group.clone()).or_insert(0) += 1;
    }
    counts
}

/// Per-class counts over `group.class_attr`.
pub fn class_counts(samples: &[Sample]) -> [usize; crate::N_CLASSES] {
    let mut counts = [0; crate::N_CLASSES];
    for s in samples {
        counts[s.group.class_attr as usize] += 1;
    }
    counts
}

/// The four partitions an experiment works on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub labeled: Vec<Sample>,
    /// Labels are stripped; `group.class_attr` is kept for auditing only.
    pub unlabeled: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
    pub feature_dim: usize,
    pub seed: u64,
}

impl DatasetBundle {
    pub fn partitions(&self) -> [(&'static str, &[Sample]); 4] {
        [
            ("labeled", &self.labeled),
            ("unlabeled", &self.unlabeled),
            ("validation", &self.validation),
            ("test", &self.test),
        ]
    }

    /// Checks id disjointness, feature dimensions, finiteness and label
    /// presence of every partition.
    pub fn validate(&self) -> Result<()> {
        if self.feature_dim == 0 {
            return Err(Error::Schema("feature_dim must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for (name, part) in self.partitions() {
            for s in part {
                if s.features.len() != self.feature_dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.feature_dim,
                        actual: s.features.len(),
                    });
                }
                if s.features.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Schema(format!(
                        "sample {} in {name} has non-finite features",
                        s.id
                    )));
                }
                if s.group.class_attr as usize >= crate::N_CLASSES {
                    return Err(Error::Schema(format!(
                        "sample {} has class {} outside {{0,1}}",
                        s.id, s.group.class_attr
                    )));
                }
                let needs_label = name != "unlabeled";
                if needs_label != s.label.is_some() {
                    return Err(Error::Schema(format!(
                        "sample {} in {name}: label {}",
                        s.id,
                        if needs_label {
                            "missing"
                        } else {
                            "must be hidden"
                        }
                    )));
                }
                if !seen.insert(s.id.as_str()) {
                    return Err(Error::Schema(format!(
                        "sample id {} appears in more than one partition",
                        s.id
                    )));
                }
            }
        }
        if self.labeled.is_empty() {
            return Err(Error::EmptyDataset("labeled partition".into()));
        }
        if self.test.is_empty() {
            return Err(Error::EmptyDataset("test partition".into()));
        }
        Ok(())
    }
}
