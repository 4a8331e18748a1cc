use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::WeightedBinaryExample;

/// Logistic regression on standardized features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        let mut z = self.bias;
        for (j, w) in self.weights.iter().enumerate() {
            let v = x.get(j).copied().unwrap_or(0.0);
            z += w * (v - self.mean[j]) / self.scale[j];
        }
        z
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }

    /// 1 when `P(y = 1 | x) > 1/2`; an exact tie predicts 0.
    pub fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.margin(x) > 0.0)
    }
}

/// Importance-weighted logistic loss minimized by SGD.
///
/// Each epoch visits a fresh permutation drawn from `seed`; the step size
/// for epoch `e` is `lr / (1 + e)`. Weights are rescaled to mean one so the
/// step size does not depend on the weight scale.
pub fn fit(data: &[WeightedBinaryExample], dim: usize, lr: f64, epochs: usize, seed: u64) -> LogisticModel {
    let total: f64 = data.iter().map(|e| e.weight).sum();
    let mut mean = vec![0.0; dim];
    let mut scale = vec![1.0; dim];
    if total > 0.0 {
        for e in data {
            for j in 0..dim {
                mean[j] += e.weight * e.features[j];
            }
        }
        mean.iter_mut().for_each(|m| *m /= total);
        let mut var = vec![0.0; dim];
        for e in data {
            for j in 0..dim {
                let d = e.features[j] - mean[j];
                var[j] += e.weight * d * d;
            }
        }
        for j in 0..dim {
            let sd = (var[j] / total).sqrt();
            scale[j] = if sd > 1e-12 { sd } else { 1.0 };
        }
    }

    let mut model = LogisticModel {
        mean,
        scale,
        weights: vec![0.0; dim],
        bias: 0.0,
    };
    if data.is_empty() || total <= 0.0 {
        return model;
    }
    let mean_weight = total / data.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut x = vec![0.0; dim];
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let step = lr / (1.0 + epoch as f64);
        for &i in &order {
            let e = &data[i];
            if e.weight == 0.0 {
                continue;
            }
            for j in 0..dim {
                x[j] = (e.features[j] - model.mean[j]) / model.scale[j];
            }
            let z = model.bias + model.weights.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>();
            let g = (e.weight / mean_weight) * (sigmoid(z) - f64::from(e.label));
            for j in 0..dim {
                model.weights[j] -= step * g * x[j];
            }
            model.bias -= step * g;
        }
    }
    model
}
