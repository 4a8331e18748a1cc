use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum-to-one tolerance for probability vectors. Inputs outside it are rejected.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// `D(y | x)` for one fixed context `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalDistribution {
    p: Vec<f64>,
}

impl ConditionalDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidDistribution(format!(
                "need at least two labels, got {}",
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("probability vector"));
        }
        if p.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidDistribution("negative probability".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        Ok(Self { p })
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn p(&self, y: usize) -> f64 {
        self.p[y]
    }

    pub fn p_star(&self) -> f64 {
        self.p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Most likely label; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let best = self.p_star();
        self.p.iter().position(|&v| v == best).unwrap()
    }

    pub fn label_regret(&self, y: usize) -> f64 {
        self.p_star() - self.p[y]
    }
}

/// `r_y = p* - p_y` for every label.
pub fn label_regrets(dist: &ConditionalDistribution) -> Vec<f64> {
    let best = dist.p_star();
    dist.probs().iter().map(|&p| best - p).collect()
}

/// Costs of each of the `k` choices, each in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostVector(Vec<f64>);

impl CostVector {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cost vector"));
        }
        if let Some(bad) = c.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidArgument(format!("cost {bad} outside [0, 1]")));
        }
        Ok(Self(c))
    }

    /// Cost 0 for `label`, 1 for every other choice.
    pub fn one_hot_loss(k: usize, label: usize) -> Self {
        Self((0..k).map(|i| if i == label { 0.0 } else { 1.0 }).collect())
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn costs(&self) -> &[f64] {
        &self.0
    }

    pub fn cost(&self, y: usize) -> f64 {
        self.0[y]
    }

    /// Cheapest label; ties go to the lowest index.
    pub fn argmin(&self) -> usize {
        let best = self.0.iter().copied().fold(f64::INFINITY, f64::min);
        self.0.iter().position(|&v| v == best).unwrap()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_pair_has_zero_regret() {
        let d = ConditionalDistribution::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(label_regrets(&d), vec![0.0, 0.0]);
    }

    #[test]
    fn three_label_example() {
        let d = ConditionalDistribution::new(vec![0.3, 0.3, 0.4]).unwrap();
        let r = label_regrets(&d);
        assert!((r[0] - 0.1).abs() < 1e-12);
        assert!((r[1] - 0.1).abs() < 1e-12);
        assert_eq!(r[2], 0.0);
    }

    #[test]
    fn random_argmin_regret_is_argmax_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let raw: Vec<f64> = (0..6).map(|_| rng.gen::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            let d = ConditionalDistribution::new(raw.iter().map(|v| v / s).collect()).unwrap();
            let r = label_regrets(&d);
            for (y, ry) in r.iter().enumerate() {
                assert!(*ry >= 0.0);
                assert_eq!(*ry, d.p_star() - d.p(y));
            }
            let argmin = r
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmin, d.argmax());
            assert_eq!(r[d.argmax()], 0.0);
        }
    }

    #[test]
    fn rejects_bad_sums_without_renormalizing() {
        assert!(ConditionalDistribution::new(vec![0.5, 0.5 + 2e-9]).is_err());
        assert!(ConditionalDistribution::new(vec![0.5, 0.5 + 5e-10]).is_ok());
        assert!(ConditionalDistribution::new(vec![1.2, -0.2]).is_err());
        assert!(ConditionalDistribution::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn cost_range_checked() {
        assert!(CostVector::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(CostVector::new(vec![0.0, 1.1]).is_err());
        assert_eq!(CostVector::new(vec![0.4, 0.2, 0.2]).unwrap().argmin(), 1);
    }
}
