//! Plot-ready series derived from `iterations.csv`.

use std::path::{Path, PathBuf};

use super::run::{ITERATIONS_FILE, ITERATIONS_HEADER, SERIES_FILE};
use crate::{Error, Result};

/// Column order of `series.dat`.
pub const SERIES_HEADER: &str = "# iteration acc acc_class0 acc_class1 SR";

/// Rewrites `series.dat` in `dir` from its `iterations.csv` and returns its
/// path.
pub fn emit_plot_data(dir: &Path) -> Result<PathBuf> {
    let src = dir.join(ITERATIONS_FILE);
    if !src.exists() {
        return Err(Error::MissingFile(src));
    }
    let malformed = |message: String| Error::Malformed {
        path: src.clone(),
        message,
    };
    let mut reader = csv::Reader::from_path(&src).map_err(|e| malformed(e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| malformed(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != ITERATIONS_HEADER {
        return Err(malformed(format!(
            "unexpected header `{}`",
            header.join(",")
        )));
    }
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .expect("header checked")
    };
    let cols = [
        col("iteration"),
        col("test_acc"),
        col("test_acc_class0"),
        col("test_acc_class1"),
        col("selection_rate"),
    ];

    let mut out = format!("{SERIES_HEADER}\n");
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        let mut fields = Vec::with_capacity(cols.len());
        for &c in &cols {
            let v = record.get(c).unwrap_or("");
            if v.parse::<f64>().map(|x| !x.is_finite()).unwrap_or(true) {
                return Err(malformed(format!("row {}: `{v}` is not a number", i + 2)));
            }
            fields.push(v);
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
        rows += 1;
    }
    if rows == 0 {
        return Err(malformed("no iterations recorded".into()));
    }
    let dest = dir.join(SERIES_FILE);
    std::fs::write(&dest, out).map_err(|e| Error::io(&dest, e))?;
    Ok(dest)
}
