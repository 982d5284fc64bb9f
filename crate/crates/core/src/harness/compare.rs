//! Side-by-side comparison of finished runs.

use std::fmt;
use std::path::{Path, PathBuf};

use super::run::RunReport;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub dir: PathBuf,
    pub accuracy: f64,
    pub selection_rate: f64,
    pub gap_pp: f64,
    /// Differences against the first run: this run minus the first.
    pub d_accuracy: f64,
    pub d_selection_rate: f64,
    pub d_gap_pp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

/// Compares the final reports of at least two run directories.
pub fn compare_runs<P: AsRef<Path>>(dirs: &[P]) -> Result<Comparison> {
    if dirs.len() < 2 {
        return Err(Error::Config(format!(
            "compare needs at least two run directories, got {}",
            dirs.len()
        )));
    }
    let reports = dirs
        .iter()
        .map(|d| RunReport::read(d.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let first = &reports[0].final_report;
    let rows = dirs
        .iter()
        .zip(&reports)
        .map(|(d, r)| {
            let f = &r.final_report;
            ComparisonRow {
                dir: d.as_ref().to_path_buf(),
                accuracy: f.overall_accuracy,
                selection_rate: f.selection_rate,
                gap_pp: f.gap_pp,
                d_accuracy: f.overall_accuracy - first.overall_accuracy,
                d_selection_rate: f.selection_rate - first.selection_rate,
                d_gap_pp: f.gap_pp - first.gap_pp,
            }
        })
        .collect();
    Ok(Comparison { rows })
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.dir.display().to_string().len())
            .max()
            .unwrap_or(3)
            .max(3);
        writeln!(
            f,
            "{:<width$}  {:>8}  {:>8}  {:>8}  {:>9}  {:>9}  {:>9}",
            "run", "acc", "SR", "gap_pp", "d_acc", "d_SR", "d_gap_pp"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<width$}  {:>8.4}  {:>8.4}  {:>8.2}  {:>+9.4}  {:>+9.4}  {:>+9.2}",
                r.dir.display().to_string(),
                r.accuracy,
                r.selection_rate,
                r.gap_pp,
                r.d_accuracy,
                r.d_selection_rate,
                r.d_gap_pp
            )?;
        }
        Ok(())
    }
}
