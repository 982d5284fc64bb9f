//! End-to-end experiment runs.
//!
//! A run directory holds exactly:
//!
//! ```text
//! manifest.json        resolved config, seeds, fingerprints, pool composition
//! iterations.csv       one row per self-training iteration, streamed
//! report.json          baseline, final and best-iteration fairness reports
//! report.txt           the same, for humans
//! series.dat           whitespace-separated plot series
//! training_logs/       baseline.csv and iter_NN.csv epoch logs
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{DataSource, ExperimentConfig};
use super::manifest::{composition, unix_now, Fingerprint, RunManifest, RunStatus, SeedPlan};
use super::plot::emit_plot_data;
use crate::data::{apply_skew, curate_balanced_test, load_csv, CsvSchema, DatasetBundle};
use crate::metrics::{gap_reduction, FairnessReport};
use crate::selftrain::{run_self_training, test_report, train_supervised, IterationRecord};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ITERATIONS_FILE: &str = "iterations.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const SERIES_FILE: &str = "series.dat";
pub const LOG_DIR: &str = "training_logs";
/// Every entry a run directory may contain.
pub const LAYOUT: [&str; 6] = [
    MANIFEST_FILE,
    ITERATIONS_FILE,
    REPORT_JSON,
    REPORT_TXT,
    SERIES_FILE,
    LOG_DIR,
];

pub const ITERATIONS_HEADER: &str = "iteration,n_selected,n_balanced,n_class0,n_class1,val_acc,test_acc,test_acc_class0,test_acc_class1,selection_rate";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub iterations: usize,
    pub baseline: FairnessReport,
    #[serde(rename = "final")]
    pub final_report: FairnessReport,
    /// Iteration with the best validation accuracy; 0 is the baseline.
    pub best_iteration: usize,
    pub best: FairnessReport,
    /// Baseline gap minus final gap, in percentage points.
    pub gap_reduction_pp: f64,
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let line = |name: &str, r: &FairnessReport| {
            format!(
                "{name:<9} acc {:.4}  class0 {:.4}  class1 {:.4}  SR {:.4}  gap {:.2} pp  80% rule {}\n",
                r.overall_accuracy,
                r.class_accuracy(0),
                r.class_accuracy(1),
                r.selection_rate,
                r.gap_pp,
                if r.passes_80_rule { "pass" } else { "fail" }
            )
        };
        let mut s = format!(
            "scenario {}  seed {}  iterations {}\n",
            self.scenario, self.seed, self.iterations
        );
        s += &line("baseline", &self.baseline);
        s += &line("final", &self.final_report);
        s += &line("best", &self.best);
        s += &format!("best iteration {}\n", self.best_iteration);
        s += &format!("gap reduction {:.2} pp\n", self.gap_reduction_pp);
        s
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(REPORT_JSON);
        let text = std::fs::read_to_string(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.clone()),
            _ => Error::io(&path, e),
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Malformed {
            path,
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub records: Vec<IterationRecord>,
    pub report: RunReport,
}

/// Builds the bundle for a resolved config and fingerprints its inputs.
pub fn build_bundle(
    config: &ExperimentConfig,
    seeds: &SeedPlan,
) -> Result<(DatasetBundle, Vec<Fingerprint>)> {
    let (mut bundle, fingerprints) = match &config.data {
        Some(DataSource::Synthetic(spec)) => {
            let canonical = serde_json::to_vec(spec).map_err(|e| Error::Config(e.to_string()))?;
            let fp = Fingerprint::of_bytes("generator", &canonical);
            (spec.generate(seeds.data)?, vec![fp])
        }
        Some(DataSource::Csv(src)) => {
            let schema = CsvSchema::new(src.feature_dim);
            let mut fps = Vec::new();
            for (name, path) in src.paths() {
                fps.push(Fingerprint::of_file(name, path)?);
            }
            let unlabeled = load_csv(&src.unlabeled, &schema)?
                .iter()
                .map(|s| s.unlabeled())
                .collect();
            let validation = match &src.validation {
                Some(p) => load_csv(p, &schema)?,
                None => Vec::new(),
            };
            let mut test = load_csv(&src.test, &schema)?;
            if src.curate_test {
                test = curate_balanced_test(&test, seeds.curate)?;
            }
            let bundle = DatasetBundle {
                labeled: load_csv(&src.labeled, &schema)?,
                unlabeled,
                validation,
                test,
                feature_dim: src.feature_dim,
                seed: seeds.data,
            };
            (bundle, fps)
        }
        None => {
            return Err(Error::Config(
                "data: no data source after resolution".into(),
            ))
        }
    };
    if let Some(skew) = &config.skew {
        bundle.unlabeled = apply_skew(&bundle.unlabeled, skew, seeds.skew)?;
    }
    if bundle.validation.is_empty() && config.selftrain.train.patience > 0 {
        return Err(Error::Config(
            "data: early stopping (selftrain.train.patience > 0) needs a validation partition"
                .into(),
        ));
    }
    bundle.validate()?;
    Ok((bundle, fingerprints))
}

/// Creates `dir`, or clears it if it holds nothing but a previous run.
fn prepare_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut stale = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let name = entry.file_name();
            if !LAYOUT.iter().any(|l| name == *l) {
                return Err(Error::Config(format!(
                    "output directory {} contains `{}`, which is not part of a run; choose an empty directory",
                    dir.display(),
                    name.to_string_lossy()
                )));
            }
            stale.push(entry.path());
        }
        for p in stale {
            let res = if p.is_dir() {
                std::fs::remove_dir_all(&p)
            } else {
                std::fs::remove_file(&p)
            };
            res.map_err(|e| Error::io(&p, e))?;
        }
    }
    std::fs::create_dir_all(dir.join(LOG_DIR)).map_err(|e| Error::io(dir, e))
}

fn iteration_row(r: &IterationRecord) -> String {
    let val = r.val_acc.map(|v| format!("{v:.6}")).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
        r.iteration,
        r.n_selected,
        r.n_balanced,
        r.n_per_class[0],
        r.n_per_class[1],
        val,
        r.test.overall_accuracy,
        r.test.class_accuracy(0),
        r.test.class_accuracy(1),
        r.test.selection_rate
    )
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Runs one experiment into the config's output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    let config = config.resolve();
    let dir = config.output_dir();
    let st = &config.selftrain;
    let seeds = SeedPlan::new(config.seed, st.iterations);
    let (bundle, fingerprints) = build_bundle(&config, &seeds)?;

    prepare_dir(&dir)?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut manifest = RunManifest {
        artifact: super::manifest::ARTIFACT.to_string(),
        version: super::manifest::VERSION.to_string(),
        status: RunStatus::Running,
        started_unix: unix_now(),
        finished_unix: None,
        config: config.clone(),
        seeds: seeds.clone(),
        fingerprints,
        composition: bundle
            .partitions()
            .iter()
            .map(|(name, samples)| (name.to_string(), composition(samples)))
            .collect(),
        error: None,
    };
    manifest.write(&manifest_path)?;

    let result = execute(&config, &bundle, &seeds, &dir);
    manifest.finished_unix = Some(unix_now());
    match &result {
        Ok(_) => manifest.status = RunStatus::Completed,
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
        }
    }
    manifest.write(&manifest_path)?;
    result
}

fn execute(
    config: &ExperimentConfig,
    bundle: &DatasetBundle,
    seeds: &SeedPlan,
    dir: &Path,
) -> Result<RunSummary> {
    let st = &config.selftrain;
    let logs = dir.join(LOG_DIR);
    let (baseline_state, baseline_log) = train_supervised(
        bundle,
        config.hidden_dim,
        &st.train,
        &st.aug,
        seeds.baseline,
    )?;
    write_file(&logs.join("baseline.csv"), &baseline_log.to_csv())?;
    let baseline = test_report(&baseline_state, &bundle.test)?;

    let iter_path = dir.join(ITERATIONS_FILE);
    let file = File::create(&iter_path).map_err(|e| Error::io(&iter_path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(&iter_path, e);
    writeln!(out, "{ITERATIONS_HEADER}")
        .and_then(|_| out.flush())
        .map_err(io)?;

    let outcome = run_self_training(&baseline_state, bundle, st, |it| {
        writeln!(out, "{}", iteration_row(&it.record))
            .and_then(|_| out.flush())
            .map_err(io)?;
        let log_path = logs.join(format!("iter_{:02}.csv", it.record.iteration));
        write_file(&log_path, &it.log.to_csv())
    })?;
    drop(out);

    let final_report = test_report(&outcome.final_state, &bundle.test)?;
    let best = if outcome.best_iteration == 0 {
        baseline.clone()
    } else {
        outcome.records[outcome.best_iteration - 1].test.clone()
    };
    let report = RunReport {
        scenario: config.scenario.to_string(),
        seed: config.seed,
        iterations: st.iterations,
        gap_reduction_pp: gap_reduction(&baseline, &final_report),
        baseline,
        final_report,
        best_iteration: outcome.best_iteration,
        best,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    write_file(&dir.join(REPORT_JSON), &(json + "\n"))?;
    write_file(&dir.join(REPORT_TXT), &report.to_text())?;
    emit_plot_data(dir)?;

    Ok(RunSummary {
        dir: dir.to_path_buf(),
        records: outcome.records,
        report,
    })
}

/// Repeats the run recorded in `manifest`, optionally into another directory.
/// CSV inputs must still match their recorded fingerprints.
pub fn rerun_from_manifest(manifest: &Path, out: Option<&Path>) -> Result<RunSummary> {
    let m = RunManifest::read(manifest)?;
    let mut config = m.config.clone();
    if let Some(dir) = out {
        config.output_dir = Some(dir.to_path_buf());
    }
    if let Some(DataSource::Csv(src)) = &config.data {
        for (name, path) in src.paths() {
            let now = Fingerprint::of_file(name, path)?;
            if !m.fingerprints.contains(&now) {
                return Err(Error::Config(format!(
                    "{}: content differs from the fingerprint in {}",
                    path.display(),
                    manifest.display()
                )));
            }
        }
    }
    run_experiment(&config)
}
