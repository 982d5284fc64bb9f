use std::collections::BTreeMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{GroupKey, Sample};
use crate::{seed, Error, Result, N_CLASSES};

/// Describes how to distort a pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewSpec {
    /// Fraction of class 1 in the output.
    #[serde(default = "half")]
    pub class_ratio: f64,
    /// Relative group shares. Groups missing from the map are dropped.
    /// `None` keeps the pool's natural group composition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_weights: Option<BTreeMap<String, f64>>,
    /// Restrict to a single (class, group) cell. When set, `class_ratio` and
    /// `group_weights` are not consulted and every matching sample is kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intersection_only: Option<GroupKey>,
}

fn half() -> f64 {
    0.5
}

impl Default for SkewSpec {
    fn default() -> Self {
        Self {
            class_ratio: 0.5,
            group_weights: None,
            intersection_only: None,
        }
    }
}

impl SkewSpec {
    pub fn class_ratio(class_ratio: f64) -> Self {
        Self {
            class_ratio,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.class_ratio) {
            return Err(Error::Config(format!(
                "class_ratio must lie in [0,1], got {}",
                self.class_ratio
            )));
        }
        if let Some(weights) = &self.group_weights {
            if weights.values().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::Config(
                    "group weights must be finite and nonnegative".into(),
                ));
            }
            if weights.values().sum::<f64>() <= 0.0 {
                return Err(Error::Config(
                    "group weights must sum to a positive value".into(),
                ));
            }
        }
        if let Some(cell) = &self.intersection_only {
            if cell.class_attr as usize >= N_CLASSES {
                return Err(Error::Config(format!(
                    "intersection class {} outside {{0,1}}",
                    cell.class_attr
                )));
            }
        }
        Ok(())
    }
}

/// Draws the largest subset of `pool` whose composition matches `spec`.
///
/// Class counts are `round(class_ratio * n)` and `n - round(class_ratio * n)`
/// for the largest feasible `n`; within a class, group counts follow the
/// weights by largest remainder. Output keeps pool order.
pub fn apply_skew(pool: &[Sample], spec: &SkewSpec, seed: u64) -> Result<Vec<Sample>> {
    if pool.is_empty() {
        return Err(Error::EmptyInput("skew pool".into()));
    }
    spec.validate()?;

    if let Some(cell) = &spec.intersection_only {
        let out: Vec<Sample> = pool.iter().filter(|s| &s.group == cell).cloned().collect();
        if out.is_empty() {
            return Err(Error::EmptyResult(format!(
                "no samples in cell (class {}, group {})",
                cell.class_attr, cell.group_attr
            )));
        }
        return Ok(out);
    }

    // Candidate indices per unit. A unit is a class, or a (class, group) cell
    // when group weights are given.
    let mut units: BTreeMap<(u8, Option<&str>), Vec<usize>> = BTreeMap::new();
    for (i, s) in pool.iter().enumerate() {
        let group = match &spec.group_weights {
            None => None,
            Some(w) => match w.get(&s.group.group_attr) {
                Some(&wg) if wg > 0.0 => Some(s.group.group_attr.as_str()),
                _ => continue,
            },
        };
        units
            .entry((s.group.class_attr, group))
            .or_default()
            .push(i);
    }

    let ratios = [1.0 - spec.class_ratio, spec.class_ratio];
    let group_share = |g: Option<&str>| -> f64 {
        match (&spec.group_weights, g) {
            (Some(w), Some(g)) => w[g] / w.values().sum::<f64>(),
            _ => 1.0,
        }
    };
    let available = |key: &(u8, Option<&str>)| units.get(key).map_or(0, Vec::len);

    // Every cell with a positive share bounds the total.
    let keys: Vec<(u8, Option<&str>)> = match &spec.group_weights {
        None => (0..N_CLASSES as u8).map(|c| (c, None)).collect(),
        Some(w) => (0..N_CLASSES as u8)
            .flat_map(|c| {
                w.iter()
                    .filter(|(_, &wg)| wg > 0.0)
                    .map(move |(g, _)| (c, Some(g.as_str())))
            })
            .collect(),
    };
    let mut upper = f64::INFINITY;
    for key in &keys {
        let share = ratios[key.0 as usize] * group_share(key.1);
        if share > 0.0 {
            upper = upper.min(available(key) as f64 / share);
        }
    }
    let mut total = if upper.is_finite() {
        (upper + 1e-9).floor() as usize
    } else {
        0
    };

    let allocation = loop {
        if total == 0 {
            return Err(Error::EmptyResult(
                "no subset of the pool satisfies the requested skew".into(),
            ));
        }
        if let Some(alloc) = allocate(total, spec, &keys, &group_share, &available) {
            break alloc;
        }
        total -= 1;
    };

    let mut rng = seed::rng(seed);
    let mut chosen = Vec::with_capacity(total);
    for (key, k) in allocation {
        let candidates = &units[&key];
        chosen.extend(
            index::sample(&mut rng, candidates.len(), k)
                .into_iter()
                .map(|j| candidates[j]),
        );
    }
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| pool[i].clone()).collect())
}

type UnitKey<'a> = (u8, Option<&'a str>);

fn allocate<'a>(
    total: usize,
    spec: &SkewSpec,
    keys: &[UnitKey<'a>],
    group_share: &dyn Fn(Option<&str>) -> f64,
    available: &dyn Fn(&UnitKey<'a>) -> usize,
) -> Option<Vec<(UnitKey<'a>, usize)>> {
    let class1 = (spec.class_ratio * total as f64).round() as usize;
    let per_class = [total - class1, class1];
    let mut out = Vec::new();
    for class in 0..N_CLASSES as u8 {
        let target = per_class[class as usize];
        let cells: Vec<&UnitKey> = keys.iter().filter(|k| k.0 == class).collect();
        let quotas: Vec<f64> = cells
            .iter()
            .map(|k| target as f64 * group_share(k.1))
            .collect();
        let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let mut missing = target.saturating_sub(counts.iter().sum());
        for &i in order.iter().cycle().take(order.len() * 2) {
            if missing == 0 {
                break;
            }
            counts[i] += 1;
            missing -= 1;
        }
        if missing > 0 {
            return None;
        }
        for (cell, count) in cells.into_iter().zip(counts) {
            if count > available(cell) {
                return None;
            }
            if count > 0 {
                out.push((*cell, count));
            }
        }
    }
    Some(out)
}

/// Class-balanced subset: `min_c count(c)` samples of each class drawn
/// uniformly without replacement. Output keeps pool order.
pub fn curate_balanced_test(pool: &[Sample], seed: u64) -> Result<Vec<Sample>> {
    let mut by_class: [Vec<usize>; N_CLASSES] = Default::default();
    for (i, s) in pool.iter().enumerate() {
        let c = s.group.class_attr as usize;
        if c >= N_CLASSES {
            return Err(Error::Curation(format!("sample {} has class {c}", s.id)));
        }
        by_class[c].push(i);
    }
    if let Some(c) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::Curation(format!(
            "class {c} is absent from the pool"
        )));
    }
    let m = by_class.iter().map(Vec::len).min().unwrap_or(0);
    let mut rng = seed::rng(seed);
    let mut chosen: Vec<usize> = by_class
        .iter()
        .flat_map(|idx| {
            index::sample(&mut rng, idx.len(), m)
                .into_iter()
                .map(|j| idx[j])
                .collect::<Vec<_>>()
        })
        .collect();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| pool[i].clone()).collect())
}
