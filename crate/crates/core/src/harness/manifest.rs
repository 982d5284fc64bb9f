//! Run manifest: everything needed to repeat a run bit for bit.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::data::{cell_counts, Sample};
use crate::{seed, Error, Result};

pub const ARTIFACT: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Completed,
    Failed,
}

/// Seeds derived from the master seed. Every stream is
/// `derive(master, k)`; iteration `i` uses `mix(master + i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master: u64,
    pub data: u64,
    pub skew: u64,
    pub curate: u64,
    pub baseline: u64,
    pub iterations: Vec<u64>,
}

impl SeedPlan {
    pub fn new(master: u64, iterations: usize) -> Self {
        Self {
            master,
            data: seed::derive(master, 100),
            skew: seed::derive(master, 101),
            curate: seed::derive(master, 102),
            baseline: seed::derive(master, 103),
            iterations: (1..=iterations)
                .map(|i| seed::iteration_seed(master, i))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub name: String,
    pub sha256: String,
}

impl Fingerprint {
    pub fn of_bytes(name: &str, bytes: &[u8]) -> Self {
        Self {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }

    pub fn of_file(name: &str, path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::of_bytes(name, &bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub class: u8,
    pub group: String,
    pub count: usize,
}

pub fn composition(samples: &[Sample]) -> Vec<CellCount> {
    cell_counts(samples)
        .into_iter()
        .map(|(k, count)| CellCount {
            class: k.class_attr,
            group: k.group_attr,
            count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub status: RunStatus,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    /// Resolved config; feeding it back to the runner repeats the run.
    pub config: ExperimentConfig,
    pub seeds: SeedPlan,
    pub fingerprints: Vec<Fingerprint>,
    /// Realized (class, group) cell counts per partition.
    pub composition: BTreeMap<String, Vec<CellCount>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}
