//! Test-error comparison of the tree, filter tree, all-pairs and all-pairs
//! filter tree reductions over repeated seeded splits.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{generate, load_csv, split_indices, Dataset, DEFAULT_LABEL_COLUMN, DEFAULT_SPLITS, DEFAULT_TRAIN_FRACTION};
use crate::domain::LabelTree;
use crate::error::Result;
use crate::learners::LearnerSpec;
use crate::reductions::{predict_label, train_all_pairs, train_apft, train_filter_tree, train_tree, ReductionModel, TrainOptions};

pub const METHODS: [&str; 4] = ["tree", "filter_tree", "all_pairs", "apft"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv { path: PathBuf, label_column: String },
    Generator { name: String },
}

impl DatasetSource {
    pub fn csv(path: impl Into<PathBuf>) -> Self {
        DatasetSource::Csv {
            path: path.into(),
            label_column: DEFAULT_LABEL_COLUMN.to_string(),
        }
    }

    pub fn generator(name: &str) -> Self {
        DatasetSource::Generator { name: name.to_string() }
    }

    pub fn describe(&self) -> String {
        match self {
            DatasetSource::Csv { path, .. } => path.display().to_string(),
            DatasetSource::Generator { name } => format!("generator:{name}"),
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Csv { path, label_column } => load_csv(path, label_column),
            DatasetSource::Generator { name } => generate(name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub master_seed: u64,
    pub splits: usize,
    pub train_fraction: f64,
    pub learner: LearnerSpec,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            splits: DEFAULT_SPLITS,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            learner: LearnerSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub k: usize,
    pub rows: usize,
    pub dropped_rows: usize,
    /// Mean test error in percent, in [`METHODS`] order.
    pub mean_error: [f64; 4],
    pub split_errors: Vec<[f64; 4]>,
    /// Methods attaining the row minimum.
    pub best: Vec<String>,
    /// Node-level warnings such as empty training sets, summed over splits.
    pub warnings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<BenchRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn error_percent(model: &ReductionModel, data: &Dataset, rows: &[usize]) -> f64 {
    let wrong = rows
        .iter()
        .filter(|&&i| predict_label(model, &data.features[i]) != data.labels[i])
        .count();
    100.0 * wrong as f64 / rows.len() as f64
}

fn run_split(data: &Dataset, cfg: &BenchConfig, split: usize) -> Result<([f64; 4], usize)> {
    let (train, test) = split_indices(data.len(), cfg.master_seed, split, cfg.train_fraction);
    let examples = data.examples(&train);
    let tree = LabelTree::balanced(data.k())?;
    let opts = TrainOptions::new(cfg.learner.clone());
    let models = [
        train_tree(&tree, &examples, &opts)?,
        train_filter_tree(&tree, &examples, &opts)?,
        train_all_pairs(data.k(), &examples, &opts)?,
        train_apft(&tree, &examples, &opts)?,
    ];
    let warnings = models.iter().map(|m| m.warnings.len()).sum();
    let mut errs = [0.0; 4];
    for (e, m) in errs.iter_mut().zip(&models) {
        *e = error_percent(m, data, &test);
    }
    Ok((errs, warnings))
}

/// Same splits for every method; rows whose rounded mean ties the minimum
/// are all flagged.
pub fn bench_dataset(data: &Dataset, cfg: &BenchConfig) -> Result<BenchRow> {
    let per: Vec<([f64; 4], usize)> = (0..cfg.splits)
        .into_par_iter()
        .map(|s| run_split(data, cfg, s))
        .collect::<Result<_>>()?;
    let mut mean = [0.0; 4];
    for (errs, _) in &per {
        for (m, e) in mean.iter_mut().zip(errs) {
            *m += e / cfg.splits as f64;
        }
    }
    let rounded: Vec<f64> = mean.iter().map(|v| (v * 100.0).round()).collect();
    let lo = rounded.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BenchRow {
        dataset: data.name.clone(),
        k: data.k(),
        rows: data.len(),
        dropped_rows: data.dropped_rows,
        mean_error: mean,
        best: METHODS
            .iter()
            .zip(&rounded)
            .filter(|(_, v)| **v == lo)
            .map(|(n, _)| n.to_string())
            .collect(),
        warnings: per.iter().map(|(_, w)| w).sum(),
        split_errors: per.into_iter().map(|(e, _)| e).collect(),
    })
}

/// One entry per source; a source that fails to load or train records its
/// error instead of aborting the run.
pub fn run_bench(sources: &[DatasetSource], cfg: &BenchConfig) -> Vec<BenchEntry> {
    sources
        .iter()
        .map(|src| {
            let (row, error) = match src.load().and_then(|d| bench_dataset(&d, cfg)) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            BenchEntry {
                source: src.describe(),
                row,
                error,
            }
        })
        .collect()
}
