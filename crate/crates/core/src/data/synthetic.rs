use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{DatasetBundle, GroupKey, Sample};
use crate::{seed, Error, Result};

/// Geometry of one subgroup.
///
/// Class means sit at `center ∓ (separability/2)·u`, where `u` is the
/// normalized `direction` (first feature axis by default), unless
/// `class_means` overrides them. Smaller separability makes the group harder;
/// a shifted center or a rotated direction moves the group's ideal decision
/// boundary away from the other groups'.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupProfile {
    pub name: String,
    pub separability: f64,
    /// Group offset. Shorter than `feature_dim` is zero-padded.
    #[serde(default)]
    pub center: Vec<f64>,
    /// Axis separating the two class means. Zero-padded like `center`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    /// Explicit (class 0, class 1) means.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_means: Option<[Vec<f64>; 2]>,
}

impl GroupProfile {
    pub fn new(name: impl Into<String>, separability: f64) -> Self {
        Self {
            name: name.into(),
            separability,
            center: Vec::new(),
            direction: None,
            class_means: None,
        }
    }

    pub fn with_center(mut self, center: Vec<f64>) -> Self {
        self.center = center;
        self
    }

    pub fn with_direction(mut self, direction: Vec<f64>) -> Self {
        self.direction = Some(direction);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub class: u8,
    pub group: String,
    pub count: usize,
}

impl CellSpec {
    pub fn new(class: u8, group: impl Into<String>, count: usize) -> Self {
        Self {
            class,
            group: group.into(),
            count,
        }
    }
}

/// Per-cell counts of one partition.
pub type PoolSpec = Vec<CellSpec>;

/// Gaussian-mixture generator for a whole bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub feature_dim: usize,
    /// Isotropic standard deviation around each cell mean.
    pub noise_scale: f64,
    pub groups: Vec<GroupProfile>,
    pub labeled: PoolSpec,
    pub unlabeled: PoolSpec,
    #[serde(default)]
    pub validation: PoolSpec,
    pub test: PoolSpec,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        self.check().map(|_| ())
    }

    fn check(&self) -> Result<BTreeMap<&str, [Vec<f64>; 2]>> {
        if self.feature_dim == 0 {
            return Err(Error::Config("feature_dim must be positive".into()));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale > 0.0) {
            return Err(Error::Config(format!(
                "noise_scale must be finite and positive, got {}",
                self.noise_scale
            )));
        }
        if self.groups.is_empty() {
            return Err(Error::Config("at least one group is required".into()));
        }
        let mut means = BTreeMap::new();
        for g in &self.groups {
            let m = self.cell_means(g)?;
            if means.insert(g.name.as_str(), m).is_some() {
                return Err(Error::Config(format!("duplicate group `{}`", g.name)));
            }
        }
        for cell in self.all_cells() {
            if cell.class > 1 {
                return Err(Error::Config(format!(
                    "class {} outside {{0,1}}",
                    cell.class
                )));
            }
            if !means.contains_key(cell.group.as_str()) {
                return Err(Error::Config(format!("undeclared group `{}`", cell.group)));
            }
        }
        if self.all_cells().map(|c| c.count).sum::<usize>() == 0 {
            return Err(Error::EmptyDataset(
                "generator requests zero samples".into(),
            ));
        }
        Ok(means)
    }

    fn all_cells(&self) -> impl Iterator<Item = &CellSpec> {
        self.labeled
            .iter()
            .chain(&self.unlabeled)
            .chain(&self.validation)
            .chain(&self.test)
    }

    fn cell_means(&self, g: &GroupProfile) -> Result<[Vec<f64>; 2]> {
        let d = self.feature_dim;
        let means = match &g.class_means {
            Some(explicit) => explicit.clone(),
            None => {
                if g.center.len() > d {
                    return Err(Error::Config(format!(
                        "group `{}` center has {} entries for dimension {d}",
                        g.name,
                        g.center.len()
                    )));
                }
                let mut center = g.center.clone();
                center.resize(d, 0.0);
                let mut axis = match &g.direction {
                    Some(dir) if dir.len() > d => {
                        return Err(Error::Config(format!(
                            "group `{}` direction has {} entries for dimension {d}",
                            g.name,
                            dir.len()
                        )))
                    }
                    Some(dir) => dir.clone(),
                    None => vec![1.0],
                };
                axis.resize(d, 0.0);
                let norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(norm.is_finite() && norm > 0.0) {
                    return Err(Error::Config(format!(
                        "group `{}` direction must be finite and nonzero",
                        g.name
                    )));
                }
                let half = g.separability / 2.0 / norm;
                let lo = center
                    .iter()
                    .zip(&axis)
                    .map(|(c, u)| c - half * u)
                    .collect();
                let hi = center
                    .iter()
                    .zip(&axis)
                    .map(|(c, u)| c + half * u)
                    .collect();
                [lo, hi]
            }
        };
        for m in &means {
            if m.len() != d {
                return Err(Error::Config(format!(
                    "group `{}` mean has dimension {}, expected {d}",
                    g.name,
                    m.len()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) || !g.separability.is_finite() {
                return Err(Error::Config(format!(
                    "group `{}` has non-finite mean",
                    g.name
                )));
            }
        }
        Ok(means)
    }

    /// Samples one partition. Ids are `{prefix}{index}`.
    pub fn sample_pool(&self, cells: &[CellSpec], prefix: &str, seed: u64) -> Result<Vec<Sample>> {
        let means = self.check()?;
        Ok(draw(&means, self.noise_scale, cells, prefix, seed))
    }

    /// Builds a bundle. Every partition has its own derived seed and id
    /// prefix, so partitions are disjoint and independent.
    pub fn generate(&self, seed: u64) -> Result<DatasetBundle> {
        let means = self.check()?;
        let part = |cells: &[CellSpec], prefix: &str, stream: u64| {
            draw(
                &means,
                self.noise_scale,
                cells,
                prefix,
                seed::derive(seed, stream),
            )
        };
        let labeled = part(&self.labeled, "L", 1);
        let unlabeled = part(&self.unlabeled, "U", 2)
            .into_iter()
            .map(|s| s.unlabeled())
            .collect();
        Ok(DatasetBundle {
            labeled,
            unlabeled,
            validation: part(&self.validation, "V", 3),
            test: part(&self.test, "T", 4),
            feature_dim: self.feature_dim,
            seed,
        })
    }
}

fn draw(
    means: &BTreeMap<&str, [Vec<f64>; 2]>,
    noise: f64,
    cells: &[CellSpec],
    prefix: &str,
    seed: u64,
) -> Vec<Sample> {
    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(cells.iter().map(|c| c.count).sum());
    for cell in cells {
        let mean = &means[cell.group.as_str()][cell.class as usize];
        for _ in 0..cell.count {
            let features = mean
                .iter()
                .map(|&m| m + noise * rng.sample::<f64, _>(StandardNormal))
                .collect();
            out.push(Sample {
                id: format!("{prefix}{}", out.len()),
                features,
                label: Some(cell.class),
                group: GroupKey::new(cell.class, cell.group.clone()),
            });
        }
    }
    out
}

/// Draws a single pool from group profiles; convenience over [`SyntheticSpec`].
pub fn generate_pool(
    feature_dim: usize,
    noise_scale: f64,
    groups: &[GroupProfile],
    cells: &[CellSpec],
    seed: u64,
) -> Result<Vec<Sample>> {
    let spec = SyntheticSpec {
        feature_dim,
        noise_scale,
        groups: groups.to_vec(),
        labeled: cells.to_vec(),
        unlabeled: vec![],
        validation: vec![],
        test: vec![],
    };
    spec.sample_pool(cells, "S", seed)
}
