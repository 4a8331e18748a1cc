use serde::{Deserialize, Serialize};

use crate::domain::WeightedBinaryExample;

/// Single-feature threshold rule: predicts `above` when `x[feature] > threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub above: u8,
}

impl Stump {
    pub fn predict(&self, x: &[f64]) -> u8 {
        let v = x.get(self.feature).copied().unwrap_or(0.0);
        if v > self.threshold {
            self.above
        } else {
            1 - self.above
        }
    }
}

pub enum StumpFit {
    Constant(u8),
    Split(Stump),
}

/// Minimizes weighted 0/1 error over constants and all midpoint thresholds.
/// Candidates are scanned constants first, then features and thresholds in
/// increasing order; a later candidate replaces the incumbent only when it
/// is strictly better.
pub fn fit(data: &[WeightedBinaryExample], dim: usize) -> StumpFit {
    let w1: f64 = data.iter().filter(|e| e.label == 1).map(|e| e.weight).sum();
    let w0: f64 = data.iter().filter(|e| e.label == 0).map(|e| e.weight).sum();
    // constant 0 errs on the positives, constant 1 on the negatives
    let mut best_err = w1;
    let mut best = StumpFit::Constant(0);
    if w0 < best_err {
        best_err = w0;
        best = StumpFit::Constant(1);
    }
    let eps = 1e-12 * (w0 + w1).max(1.0);

    let mut idx: Vec<usize> = (0..data.len()).collect();
    for j in 0..dim {
        idx.sort_by(|&a, &b| data[a].features[j].total_cmp(&data[b].features[j]));
        // weight of each label at or below the current cut
        let mut below1 = 0.0;
        let mut below0 = 0.0;
        for pos in 0..idx.len() {
            let e = &data[idx[pos]];
            if e.label == 1 {
                below1 += e.weight;
            } else {
                below0 += e.weight;
            }
            let Some(&next) = idx.get(pos + 1) else { break };
            let here = e.features[j];
            let there = data[next].features[j];
            if there <= here {
                continue;
            }
            let threshold = here + (there - here) / 2.0;
            // above = 1: errors are positives below plus negatives above
            let err_up = below1 + (w0 - below0);
            let err_down = below0 + (w1 - below1);
            if err_up < best_err - eps {
                best_err = err_up;
                best = StumpFit::Split(Stump { feature: j, threshold, above: 1 });
            }
            if err_down < best_err - eps {
                best_err = err_down;
                best = StumpFit::Split(Stump { feature: j, threshold, above: 0 });
            }
        }
    }
    best
}
