use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::WeightedBinaryExample;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Accept with probability `w / max w` over the batch.
    MaxWeight,
    /// Accept with probability `min(w, 1)`.
    UnitCap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostingConfig {
    pub normalization: Normalization,
    pub seed: u64,
}

impl Default for CostingConfig {
    fn default() -> Self {
        Self {
            normalization: Normalization::MaxWeight,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Resampled {
    /// Accepted examples, all with weight 1.
    pub examples: Vec<WeightedBinaryExample>,
    /// Divisor applied to the weights to obtain acceptance probabilities.
    pub normalizer: f64,
    pub warnings: Vec<String>,
}

/// Rejection-samples an importance-weighted set into an unweighted one.
pub fn costing_resample(data: &[WeightedBinaryExample], cfg: &CostingConfig) -> Result<Resampled> {
    if let Some(bad) = data.iter().find(|e| !e.weight.is_finite() || e.weight < 0.0) {
        return Err(Error::TrainingData(format!("importance weight {} is invalid", bad.weight)));
    }
    let max = data.iter().map(|e| e.weight).fold(0.0, f64::max);
    if max == 0.0 {
        let warning = format!("costing: all {} importance weights are zero", data.len());
        log::warn!("{warning}");
        return Ok(Resampled {
            examples: Vec::new(),
            normalizer: 0.0,
            warnings: vec![warning],
        });
    }
    let normalizer = match cfg.normalization {
        Normalization::MaxWeight => max,
        Normalization::UnitCap => 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut examples = Vec::new();
    for e in data {
        let accept = (e.weight / normalizer).min(1.0);
        // one draw per example keeps the stream aligned with the input order
        let u: f64 = rng.gen();
        if u < accept {
            examples.push(WeightedBinaryExample {
                features: e.features.clone(),
                label: e.label,
                weight: 1.0,
            });
        }
    }
    Ok(Resampled {
        examples,
        normalizer,
        warnings: Vec::new(),
    })
}
