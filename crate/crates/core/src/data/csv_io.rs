use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GroupKey, Sample};
use crate::{Error, Result};

/// Column layout of a sample CSV.
///
/// Feature columns are `f0..f{d-1}`. The `label` column is optional in the
/// file: when absent every row is unlabeled. `class_column` and
/// `group_column` carry the audit metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    pub feature_dim: usize,
    #[serde(default = "default_label")]
    pub label_column: String,
    #[serde(default = "default_class")]
    pub class_column: String,
    #[serde(default = "default_group")]
    pub group_column: String,
    /// Row ids are taken from this column when present, otherwise
    /// `{file stem}:{row}`.
    #[serde(default = "default_id")]
    pub id_column: String,
}

fn default_label() -> String {
    "label".into()
}
fn default_class() -> String {
    "class".into()
}
fn default_group() -> String {
    "group".into()
}
fn default_id() -> String {
    "id".into()
}

impl CsvSchema {
    pub fn new(feature_dim: usize) -> Self {
        Self {
            feature_dim,
            label_column: default_label(),
            class_column: default_class(),
            group_column: default_group(),
            id_column: default_id(),
        }
    }
}

fn parse_class(cell: &str, row: usize, column: &str) -> Result<u8> {
    match cell.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::Parse {
            row,
            message: format!("column `{column}`: expected 0 or 1, got `{other}`"),
        }),
    }
}

/// Reads samples from `path`. Row numbers in errors are 1-based data rows
/// (the header is row 0).
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Vec<Sample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Schema(format!("{}: unreadable header: {e}", path.display())))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| {
        column(name)
            .ok_or_else(|| Error::Schema(format!("{}: missing column `{name}`", path.display())))
    };

    let feature_cols = (0..schema.feature_dim)
        .map(|j| require(&format!("f{j}")))
        .collect::<Result<Vec<_>>>()?;
    let extra = headers
        .iter()
        .filter(|h| {
            h.strip_prefix('f')
                .and_then(|n| n.parse::<usize>().ok())
                .is_some_and(|j| j >= schema.feature_dim)
        })
        .count();
    if extra > 0 {
        return Err(Error::Schema(format!(
            "{}: {} feature columns beyond declared dimension {}",
            path.display(),
            extra,
            schema.feature_dim
        )));
    }
    let class_col = require(&schema.class_column)?;
    let group_col = require(&schema.group_column)?;
    let label_col = column(&schema.label_column);
    let id_col = column(&schema.id_column);
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();

    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let features = feature_cols
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let cell = &record[c];
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(Error::Parse {
                        row,
                        message: format!("column f{j}: `{cell}` is not a finite number"),
                    }),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let class_attr = parse_class(&record[class_col], row, &schema.class_column)?;
        let label = label_col
            .map(|c| parse_class(&record[c], row, &schema.label_column))
            .transpose()?;
        let id = match id_col {
            Some(c) => record[c].to_string(),
            None => format!("{stem}:{row}"),
        };
        out.push(Sample {
            id,
            features,
            label,
            group: GroupKey::new(class_attr, &record[group_col]),
        });
    }
    Ok(out)
}

/// Writes samples with header `id,f0..f{d-1},[label,]class,group`. The label
/// column is written only when every sample is labeled.
pub fn write_csv(path: &Path, samples: &[Sample], feature_dim: usize) -> Result<()> {
    let labeled = !samples.is_empty() && samples.iter().all(|s| s.label.is_some());
    let mut text = String::from("id");
    for j in 0..feature_dim {
        text.push_str(&format!(",f{j}"));
    }
    if labeled {
        text.push_str(",label");
    }
    text.push_str(",class,group\n");
    for s in samples {
        if s.features.len() != feature_dim {
            return Err(Error::DimensionMismatch {
                expected: feature_dim,
                actual: s.features.len(),
            });
        }
        text.push_str(&s.id);
        for v in &s.features {
            text.push_str(&format!(",{v}"));
        }
        if let Some(label) = s.label.filter(|_| labeled) {
            text.push_str(&format!(",{label}"));
        }
        text.push_str(&format!(",{},{}\n", s.group.class_attr, s.group.group_attr));
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn labeled_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "a.csv",
            "f0,f1,label,class,group\n1,2,0,0,A\n3,4,1,1,B\n5,6,1,1,A\n",
        );
        let s = load_csv(&p, &CsvSchema::new(2)).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.iter().all(|x| x.label.is_some()));
        assert_eq!(s[1].features, vec![3.0, 4.0]);
        assert_eq!(s[1].group, GroupKey::new(1, "B"));
        assert_eq!(s[2].id, "a:3");
    }

    #[test]
    fn missing_label_column_gives_unlabeled_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "a.csv",
            "f0,f1,class,group\n1,2,0,A\n3,4,1,B\n5,6,1,A\n",
        );
        let s = load_csv(&p, &CsvSchema::new(2)).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.iter().all(|x| x.label.is_none()));
    }

    #[test]
    fn nan_cell_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "f0,class,group\n1,0,A\nNaN,1,A\n");
        match load_csv(&p, &CsvSchema::new(1)) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "f0,f1,class,group\n1,2,0,A\n");
        assert!(matches!(
            load_csv(&p, &CsvSchema::new(3)),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            load_csv(&p, &CsvSchema::new(1)),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn short_row_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "f0,class,group\n1,0,A\n2,1\n");
        assert!(matches!(
            load_csv(&p, &CsvSchema::new(1)),
            Err(Error::Parse { row: 2, .. })
        ));
    }

    #[test]
    fn written_file_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let samples = vec![
            Sample {
                id: "x1".into(),
                features: vec![0.1, -2.5e-3],
                label: Some(1),
                group: GroupKey::new(1, "EastAsian"),
            },
            Sample {
                id: "x2".into(),
                features: vec![1.0 / 3.0, 7.0],
                label: Some(0),
                group: GroupKey::new(0, "White"),
            },
        ];
        let p = dir.path().join("out.csv");
        write_csv(&p, &samples, 2).unwrap();
        assert_eq!(load_csv(&p, &CsvSchema::new(2)).unwrap(), samples);
    }
}
