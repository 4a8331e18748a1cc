//! Dataset ingestion: CSV files with a header and one label column, the
//! bundled synthetic generators, and seeded train/test splits.

mod synth;

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Example;
use crate::error::{Error, Result};

pub use synth::{generate, GENERATORS};

pub const DEFAULT_LABEL_COLUMN: &str = "label";
pub const DEFAULT_SPLITS: usize = 10;
pub const DEFAULT_TRAIN_FRACTION: f64 = 2.0 / 3.0;

/// Cells treated as missing. Rows containing one are dropped.
const MISSING: [&str; 4] = ["", "?", "NA", "NaN"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    /// Index `i` is the string of label `i`.
    pub label_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Rows removed for missing cells.
    pub dropped_rows: usize,
}

impl Dataset {
    pub fn k(&self) -> usize {
        self.label_names.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn examples(&self, rows: &[usize]) -> Vec<Example> {
        rows.iter()
            .map(|&i| Example::labeled(self.features[i].clone(), self.labels[i]))
            .collect()
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.label_names.iter().position(|l| l == name)
    }

    /// Builds the label dictionary from raw label strings. Labels that all
    /// parse as numbers are ordered numerically, anything else
    /// lexicographically.
    pub fn from_raw(name: &str, feature_names: Vec<String>, rows: Vec<(Vec<f64>, String)>, dropped: usize) -> Result<Self> {
        let distinct: BTreeSet<&str> = rows.iter().map(|(_, l)| l.as_str()).collect();
        let mut names: Vec<String> = distinct.into_iter().map(str::to_string).collect();
        if names.iter().all(|l| l.parse::<f64>().is_ok()) {
            names.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
        }
        if names.len() < 2 {
            return Err(Error::Dataset(format!("{name}: need at least two distinct labels, found {}", names.len())));
        }
        let (features, labels) = rows
            .into_iter()
            .map(|(x, l)| (x, names.iter().position(|n| *n == l).unwrap()))
            .unzip();
        Ok(Self {
            name: name.to_string(),
            feature_names,
            label_names: names,
            features,
            labels,
            dropped_rows: dropped,
        })
    }
}

/// A CSV read without building a label dictionary.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub name: String,
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    /// `None` when the label column is absent.
    pub labels: Option<Vec<String>>,
    pub dropped_rows: usize,
}

/// Reads a header-first CSV. Every column except `label_column` must be
/// numeric. A missing label column is an error only if `require_label`.
pub fn read_table(path: &Path, label_column: &str, require_label: bool) -> Result<RawTable> {
    let name = path
        .file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_at = headers.iter().position(|h| h == label_column);
    if label_at.is_none() && require_label {
        return Err(Error::Dataset(format!("{name}: no column named '{label_column}'")));
    }
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_at)
        .map(|(_, h)| h.to_string())
        .collect();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().any(|c| MISSING.contains(&c)) {
            dropped += 1;
            continue;
        }
        let mut x = Vec::with_capacity(feature_names.len());
        for (i, cell) in record.iter().enumerate() {
            if Some(i) == label_at {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::Dataset(format!("{name}: row {} column '{}' is not numeric: '{cell}'", line + 2, &headers[i]))
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite("dataset feature"));
            }
            x.push(v);
        }
        features.push(x);
        if let Some(at) = label_at {
            labels.push(record[at].to_string());
        }
    }
    if dropped > 0 {
        log::info!("{name}: dropped {dropped} rows with missing cells");
    }
    Ok(RawTable {
        name,
        feature_names,
        features,
        labels: label_at.map(|_| labels),
        dropped_rows: dropped,
    })
}

/// Reads a labelled CSV; see [`read_table`].
pub fn load_csv(path: &Path, label_column: &str) -> Result<Dataset> {
    let t = read_table(path, label_column, true)?;
    let rows = t.features.into_iter().zip(t.labels.unwrap_or_default()).collect();
    Dataset::from_raw(&t.name, t.feature_names, rows, t.dropped_rows)
}

pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = dataset.feature_names.clone();
    header.push(DEFAULT_LABEL_COLUMN.to_string());
    w.write_record(&header)?;
    for (x, &y) in dataset.features.iter().zip(&dataset.labels) {
        let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        rec.push(dataset.label_names[y].clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Train and test row indices for split `index`.
///
/// Split `i` shuffles `0..n` with ChaCha8 seeded by the master seed on
/// stream `i`, then takes the first `round(n·fraction)` rows for training.
/// Every method evaluated under the same master seed sees the same splits.
pub fn split_indices(n: usize, master_seed: u64, index: usize, train_fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let cut = ((n as f64 * train_fraction).round() as usize).clamp(1.min(n), n.saturating_sub(1));
    let test = idx.split_off(cut);
    (idx, test)
}
