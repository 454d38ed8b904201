//! CSV serialization of feature vectors.
//!
//! Dump schema: `id,label,<57 feature-name columns>`. The adversarial dump
//! prepends an `attack_id` column after `label`.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use super::{FeatureVector, FEATURE_NAMES, N_FEATURES};
use crate::corpus::Label;

#[derive(Debug, Clone)]
pub struct FeatureRow {
    pub id: String,
    pub label: Label,
    pub values: [i8; N_FEATURES],
}

impl FeatureRow {
    pub fn vector(&self) -> FeatureVector {
        FeatureVector::new(self.values, self.id.clone())
    }
}

#[derive(Debug, Error)]
pub enum FeatureCsvError {
    #[error("cannot open feature csv {0}")]
    Unreadable(String),
    #[error("feature csv {path}: bad header (expected id,label,{} feature columns)", N_FEATURES)]
    BadHeader { path: String },
    #[error("feature csv {path} row {row}: {reason}")]
    BadRow {
        path: String,
        row: usize,
        reason: String,
    },
    #[error("io error writing feature csv: {0}")]
    Io(#[from] std::io::Error),
}

fn header(with_attack: bool) -> Vec<&'static str> {
    let mut h = vec!["id", "label"];
    if with_attack {
        h.push("attack_id");
    }
    h.extend(FEATURE_NAMES.iter());
    h
}

/// Writes the feature-vector dump.
pub fn write_feature_csv<W: Write>(
    out: W,
    rows: impl Iterator<Item = FeatureRow>,
) -> Result<(), FeatureCsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(false)).map_err(csv_io)?;
    for row in rows {
        let mut record = vec![row.id.clone(), row.label.as_str().to_string()];
        record.extend(row.values.iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the adversarial dump (feature dump plus an attack-id column).
pub fn write_adversarial_csv<W: Write>(
    out: W,
    rows: impl Iterator<Item = (String, FeatureRow)>,
) -> Result<(), FeatureCsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(true)).map_err(csv_io)?;
    for (attack_id, row) in rows {
        let mut record = vec![row.id.clone(), row.label.as_str().to_string(), attack_id];
        record.extend(row.values.iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> FeatureCsvError {
    FeatureCsvError::Io(std::io::Error::new(std::io::ErrorKind::Other, e))
}

/// Reads a feature-vector dump written by [`write_feature_csv`].
pub fn read_feature_csv(path: &Path) -> Result<Vec<FeatureRow>, FeatureCsvError> {
    let display = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|_| FeatureCsvError::Unreadable(display.clone()))?;
    {
        let headers = reader
            .headers()
            .map_err(|_| FeatureCsvError::BadHeader {
                path: display.clone(),
            })?;
        let expected = header(false);
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(FeatureCsvError::BadHeader { path: display });
        }
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 2;
        let record = record.map_err(|e| FeatureCsvError::BadRow {
            path: display.clone(),
            row: row_no,
            reason: e.to_string(),
        })?;
        if record.len() != N_FEATURES + 2 {
            return Err(FeatureCsvError::BadRow {
                path: display.clone(),
                row: row_no,
                reason: format!("expected {} fields, found {}", N_FEATURES + 2, record.len()),
            });
        }
        let label = Label::parse(&record[1]).ok_or_else(|| FeatureCsvError::BadRow {
            path: display.clone(),
            row: row_no,
            reason: format!("unknown label `{}`", &record[1]),
        })?;
        let mut values = [0i8; N_FEATURES];
        for (slot, field) in record.iter().skip(2).enumerate() {
            let v: i8 = field.parse().map_err(|_| FeatureCsvError::BadRow {
                path: display.clone(),
                row: row_no,
                reason: format!("non-ternary value `{field}`"),
            })?;
            if !(-1..=1).contains(&v) {
                return Err(FeatureCsvError::BadRow {
                    path: display.clone(),
                    row: row_no,
                    reason: format!("non-ternary value `{field}`"),
                });
            }
            values[slot] = v;
        }
        rows.push(FeatureRow {
            id: record[0].to_string(),
            label,
            values,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        let mut values = [0i8; N_FEATURES];
        values[0] = 1;
        values[56] = -1;
        let rows = vec![
            FeatureRow {
                id: "a".into(),
                label: Label::Phishing,
                values,
            },
            FeatureRow {
                id: "b".into(),
                label: Label::Benign,
                values: [-1; N_FEATURES],
            },
        ];
        let file = std::fs::File::create(&path).unwrap();
        write_feature_csv(file, rows.clone().into_iter()).unwrap();
        let back = read_feature_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].id, "a");
        assert_eq!(back[0].values, rows[0].values);
        assert_eq!(back[1].label, Label::Benign);
    }

    #[test]
    fn rejects_out_of_range_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let mut text = String::from("id,label");
        for name in FEATURE_NAMES {
            text.push(',');
            text.push_str(name);
        }
        text.push('\n');
        text.push_str("x,phishing");
        for _ in 0..N_FEATURES {
            text.push_str(",7");
        }
        text.push('\n');
        std::fs::write(&path, text).unwrap();
        assert!(read_feature_csv(&path).is_err());
    }
}
