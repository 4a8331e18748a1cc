use serde::{Deserialize, Serialize};

use super::distribution::CostVector;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Label(usize),
    Costs(CostVector),
}

/// A multiclass or cost-sensitive training example.
///
/// `weight` is a sampling weight (1 for ordinary data). Exact-population
/// datasets built from a known distribution use it to carry probability mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub features: Vec<f64>,
    pub target: Target,
    pub weight: f64,
}

impl Example {
    pub fn labeled(features: Vec<f64>, label: usize) -> Self {
        Self {
            features,
            target: Target::Label(label),
            weight: 1.0,
        }
    }

    pub fn costed(features: Vec<f64>, costs: CostVector) -> Self {
        Self {
            features,
            target: Target::Costs(costs),
            weight: 1.0,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn label(&self) -> Option<usize> {
        match self.target {
            Target::Label(y) => Some(y),
            Target::Costs(_) => None,
        }
    }

    /// Cost of predicting `y`; for labeled examples this is the 0/1 loss.
    pub fn cost_of(&self, y: usize) -> f64 {
        match &self.target {
            Target::Label(l) => {
                if *l == y {
                    0.0
                } else {
                    1.0
                }
            }
            Target::Costs(c) => c.cost(y),
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("example features"));
        }
        if !self.weight.is_finite() || self.weight < 0.0 {
            return Err(Error::TrainingData(format!("bad example weight {}", self.weight)));
        }
        match &self.target {
            Target::Label(y) if *y >= k => Err(Error::TrainingData(format!(
                "label {y} out of range for k = {k}"
            ))),
            Target::Costs(c) if c.k() != k => Err(Error::TrainingData(format!(
                "cost vector has length {}, expected {k}",
                c.k()
            ))),
            _ => Ok(()),
        }
    }
}

/// Importance-weighted binary example. `label` 0 means the left input, 1 the right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedBinaryExample {
    pub features: Vec<f64>,
    pub label: u8,
    pub weight: f64,
}

impl WeightedBinaryExample {
    pub fn new(features: Vec<f64>, label: u8, weight: f64) -> Result<Self> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::TrainingData(format!("importance weight {weight} is invalid")));
        }
        if label > 1 {
            return Err(Error::TrainingData(format!("binary label {label} is not 0 or 1")));
        }
        Ok(Self {
            features,
            label,
            weight,
        })
    }
}

/// Exact identity of a feature vector, used as a context key by truth tables.
pub fn context_key(features: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 are the same context
    features.iter().map(|v| (v + 0.0).to_bits()).collect()
}
