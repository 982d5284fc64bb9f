//! Built-in synthetic stand-ins for the two bias scenarios.
//!
//! Four groups live in a 16-dimensional space. "White" is the majority group
//! and dominates the labeled set. The other three sit at offset centers with
//! partly rotated class axes, and "EastAsian" is additionally the hardest
//! (smallest separability, mostly its own axis), so a model fitted to the
//! labeled set transfers poorly to it. The test set is class-balanced and
//! weighted toward EastAsian.

use crate::data::{CellSpec, GroupProfile, PoolSpec, SkewSpec, SyntheticSpec};

pub const FEATURE_DIM: usize = 16;
pub const LABELED_TOTAL: [(&str, usize); 4] = [
    ("White", 1400),
    ("Black", 200),
    ("Indian", 160),
    ("EastAsian", 40),
];
/// Share of class 1 in the scenario-1 labeled set.
pub const SCENARIO1_LABELED_CLASS1: f64 = 0.2;
/// Class-1 share of the scenario-2 unlabeled pool (80/20 split).
pub const SCENARIO2_CLASS_RATIO: f64 = 0.2;

fn block(from: usize, len: usize, value: f64) -> Vec<f64> {
    let mut v = vec![0.0; FEATURE_DIM];
    v[from..from + len].iter_mut().for_each(|x| *x = value);
    v
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(x, y)| a * x + y).collect()
}

pub fn groups() -> Vec<GroupProfile> {
    let majority_axis = block(0, 4, 0.5);
    let other_axis = block(8, 4, 0.5);
    let offset = 2.5;
    let tilted = axpy(0.3, &other_axis, &majority_axis);
    vec![
        GroupProfile::new("White", 4.0).with_direction(majority_axis.clone()),
        GroupProfile::new("Black", 3.5)
            .with_center(block(12, 2, offset / 2f64.sqrt()))
            .with_direction(tilted.clone()),
        GroupProfile::new("Indian", 3.5)
            .with_center(block(14, 2, offset / 2f64.sqrt()))
            .with_direction(tilted),
        GroupProfile::new("EastAsian", 3.0)
            .with_center(block(4, 4, offset / 2.0))
            .with_direction(axpy(0.3, &majority_axis, &other_axis)),
    ]
}

fn per_group(counts: [(&str, usize); 4]) -> PoolSpec {
    counts
        .iter()
        .flat_map(|&(g, n)| (0..2).map(move |c| CellSpec::new(c, g, n)))
        .filter(|cell| cell.count > 0)
        .collect()
}

/// Labeled set with the given share of class 1 in every group.
fn labeled(class1_share: f64) -> PoolSpec {
    let mut cells = Vec::new();
    for (g, n) in LABELED_TOTAL {
        let n1 = (n as f64 * class1_share).round() as usize;
        cells.push(CellSpec::new(0, g, n - n1));
        cells.push(CellSpec::new(1, g, n1));
    }
    cells.retain(|c| c.count > 0);
    cells
}

fn spec(labeled: PoolSpec) -> SyntheticSpec {
    SyntheticSpec {
        feature_dim: FEATURE_DIM,
        noise_scale: 1.0,
        groups: groups(),
        labeled,
        unlabeled: per_group([
            ("White", 1000),
            ("Black", 1000),
            ("Indian", 1000),
            ("EastAsian", 1000),
        ]),
        validation: per_group([
            ("White", 0),
            ("Black", 0),
            ("Indian", 0),
            ("EastAsian", 300),
        ]),
        test: per_group([
            ("White", 100),
            ("Black", 50),
            ("Indian", 50),
            ("EastAsian", 800),
        ]),
    }
}

/// Scenario 1: biased labeled stand-in (majority group, majority class) and a
/// balanced unlabeled pool.
pub fn scenario1() -> SyntheticSpec {
    spec(labeled(SCENARIO1_LABELED_CLASS1))
}

/// Scenario 2: class-balanced labeled stand-in; the pool is distorted by a
/// [`SkewSpec`] afterwards.
pub fn scenario2() -> SyntheticSpec {
    spec(labeled(0.5))
}

pub fn scenario2_skew() -> SkewSpec {
    SkewSpec::class_ratio(SCENARIO2_CLASS_RATIO)
}
