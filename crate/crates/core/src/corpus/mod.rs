//! Dataset ingestion, deterministic stratified splitting, and synthetic
//! corpus generation.
//!
//! The on-disk form of a dataset is a CSV manifest (`id,label,url,html_path`)
//! whose `html_path` entries are relative to the manifest's directory. HTML is
//! loaded verbatim as bytes; decoding happens at feature-extraction time.

mod synth;

pub use synth::{synth_generate, SynthError};

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

/// Ground-truth class of a webpage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Phishing,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Phishing => "phishing",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "benign" => Some(Label::Benign),
            "phishing" => Some(Label::Phishing),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A raw sample: URL string plus HTML bytes plus ground truth.
///
/// HTML may be empty or malformed; the URL must be non-empty. Pages are
/// immutable once constructed and cheap to clone (the HTML is shared).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Webpage {
    pub id: String,
    pub url: String,
    pub html: Arc<Vec<u8>>,
    pub label: Label,
}

impl Webpage {
    pub fn new(
        id: impl Into<String>,
        url: impl Into<String>,
        html: Vec<u8>,
        label: Label,
    ) -> Webpage {
        Webpage {
            id: id.into(),
            url: url.into(),
            html: Arc::new(html),
            label,
        }
    }

    /// Copy of this page with a different URL (HTML shared, id and label kept).
    pub fn with_url(&self, url: String) -> Webpage {
        Webpage {
            id: self.id.clone(),
            url,
            html: Arc::clone(&self.html),
            label: self.label,
        }
    }

    /// Copy of this page with different HTML (URL shared, id and label kept).
    pub fn with_html(&self, html: Vec<u8>) -> Webpage {
        Webpage {
            id: self.id.clone(),
            url: self.url.clone(),
            html: Arc::new(html),
            label: self.label,
        }
    }
}

/// An ordered collection of webpages with unique ids.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub samples: Vec<Webpage>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, samples: Vec<Webpage>) -> Dataset {
        Dataset {
            name: name.into(),
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }
}

/// A stratified train/inference split of a dataset.
///
/// The four partitions are pairwise disjoint and cover the source dataset;
/// identical `(dataset, seed, fraction)` inputs reproduce the partition.
#[derive(Debug, Clone)]
pub struct SplitPartition {
    pub train_benign: Vec<Webpage>,
    pub train_phish: Vec<Webpage>,
    pub infer_benign: Vec<Webpage>,
    pub infer_phish: Vec<Webpage>,
    pub seed: u64,
}

impl SplitPartition {
    pub fn train_iter(&self) -> impl Iterator<Item = &Webpage> {
        self.train_benign.iter().chain(self.train_phish.iter())
    }

    pub fn infer_iter(&self) -> impl Iterator<Item = &Webpage> {
        self.infer_benign.iter().chain(self.infer_phish.iter())
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("manifest not found: {0}")]
    ManifestMissing(PathBuf),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest {path} has invalid header: expected `id,label,url,html_path`")]
    BadHeader { path: PathBuf },
    #[error("manifest row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error("duplicate sample id `{id}` (manifest row {row})")]
    DuplicateId { id: String, row: usize },
    #[error("sample `{id}`: html file missing: {path}")]
    HtmlMissing { id: String, path: PathBuf },
    #[error("empty dataset: manifest {0} has no rows")]
    EmptyDataset(PathBuf),
    #[error("train fraction {0} outside (0,1)")]
    BadFraction(f64),
    #[error("class `{label}` has {n} samples; splitting needs at least 2 per class")]
    ClassTooSmall { label: Label, n: usize },
}

const MANIFEST_HEADER: [&str; 4] = ["id", "label", "url", "html_path"];

/// Loads a dataset from a CSV manifest. HTML bytes are read verbatim.
pub fn load_manifest(path: &Path) -> Result<Dataset, CorpusError> {
    if !path.is_file() {
        return Err(CorpusError::ManifestMissing(path.to_path_buf()));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CorpusError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::Other, e),
        })?;
    {
        let headers = reader.headers().map_err(|_| CorpusError::BadHeader {
            path: path.to_path_buf(),
        })?;
        if headers.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
            return Err(CorpusError::BadHeader {
                path: path.to_path_buf(),
            });
        }
    }

    let mut seen = HashSet::new();
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header line
        let record = record.map_err(|e| CorpusError::BadRow {
            row,
            reason: e.to_string(),
        })?;
        if record.len() != 4 {
            return Err(CorpusError::BadRow {
                row,
                reason: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(CorpusError::BadRow {
                row,
                reason: "empty id".into(),
            });
        }
        let label = Label::parse(&record[1]).ok_or_else(|| CorpusError::BadRow {
            row,
            reason: format!("unknown label `{}` for id `{id}`", &record[1]),
        })?;
        let url = record[2].to_string();
        if url.is_empty() {
            return Err(CorpusError::BadRow {
                row,
                reason: format!("empty url for id `{id}`"),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id, row });
        }
        let html_path = dir.join(&record[3]);
        let html = std::fs::read(&html_path).map_err(|_| CorpusError::HtmlMissing {
            id: id.clone(),
            path: html_path.clone(),
        })?;
        samples.push(Webpage::new(id, url, html, label));
    }
    if samples.is_empty() {
        return Err(CorpusError::EmptyDataset(path.to_path_buf()));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Ok(Dataset::new(name, samples))
}

/// Writes a dataset to `dir` as `manifest.csv` plus one HTML file per sample
/// under `pages/`. Returns the manifest path.
pub fn write_manifest(dataset: &Dataset, dir: &Path) -> Result<PathBuf, CorpusError> {
    let pages = dir.join("pages");
    std::fs::create_dir_all(&pages).map_err(|e| CorpusError::Io {
        path: pages.clone(),
        source: e,
    })?;
    let manifest_path = dir.join("manifest.csv");
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(&manifest_path)
        .map_err(|e| CorpusError::Io {
            path: manifest_path.clone(),
            source: std::io::Error::new(std::io::ErrorKind::Other, e),
        })?;
    let io_err = |path: &Path, e: csv::Error| CorpusError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::Other, e),
    };
    writer
        .write_record(MANIFEST_HEADER)
        .map_err(|e| io_err(&manifest_path, e))?;
    for sample in &dataset.samples {
        let rel = format!("pages/{}.html", sample.id);
        let html_path = dir.join(&rel);
        std::fs::write(&html_path, sample.html.as_slice()).map_err(|e| CorpusError::Io {
            path: html_path.clone(),
            source: e,
        })?;
        writer
            .write_record([
                sample.id.as_str(),
                sample.label.as_str(),
                sample.url.as_str(),
                rel.as_str(),
            ])
            .map_err(|e| io_err(&manifest_path, e))?;
    }
    writer
        .flush()
        .map_err(|e| CorpusError::Io {
            path: manifest_path.clone(),
            source: e,
        })?;
    Ok(manifest_path)
}

/// Stratified split: benign and phishing are shuffled and cut independently
/// at `train_fraction`. Deterministic for a fixed seed.
pub fn split(
    dataset: &Dataset,
    seed_value: u64,
    train_fraction: f64,
) -> Result<SplitPartition, CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::BadFraction(train_fraction));
    }
    let benign: Vec<&Webpage> = dataset
        .samples
        .iter()
        .filter(|s| s.label == Label::Benign)
        .collect();
    let phish: Vec<&Webpage> = dataset
        .samples
        .iter()
        .filter(|s| s.label == Label::Phishing)
        .collect();
    for (label, class) in [(Label::Benign, &benign), (Label::Phishing, &phish)] {
        if class.len() < 2 {
            return Err(CorpusError::ClassTooSmall {
                label,
                n: class.len(),
            });
        }
    }

    let cut = |class: &[&Webpage], stream: u64| -> (Vec<Webpage>, Vec<Webpage>) {
        let mut order: Vec<usize> = (0..class.len()).collect();
        order.shuffle(&mut seed::rng(seed::mix(seed_value, stream)));
        let n_train = ((class.len() as f64) * train_fraction).round() as usize;
        let n_train = n_train.clamp(1, class.len() - 1);
        let train = order[..n_train].iter().map(|&i| class[i].clone()).collect();
        let infer = order[n_train..].iter().map(|&i| class[i].clone()).collect();
        (train, infer)
    };
    let (train_benign, infer_benign) = cut(&benign, 0);
    let (train_phish, infer_phish) = cut(&phish, 1);
    Ok(SplitPartition {
        train_benign,
        train_phish,
        infer_benign,
        infer_phish,
        seed: seed_value,
    })
}
