use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ConditionalDistribution, Example, LabelTree};
use crate::error::{invalid, Result};
use crate::learners::LearnerSpec;
use crate::reductions::{predict_label, train_filter_tree, train_tree, TrainOptions};

/// How the training set is drawn from the three-label distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Population {
    /// One row per label weighted by its probability.
    Exact,
    Sampled { n: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyOutcome {
    pub epsilon: f64,
    pub probabilities: Vec<f64>,
    pub tree_label: usize,
    pub ft_label: usize,
    pub tree_regret: f64,
    pub ft_regret: f64,
    /// `1 - p(tree_label)`.
    pub tree_error: f64,
    pub warnings: Vec<String>,
}

/// Labels `{0, 1}` against `{2}` with probabilities `(1/4+ε, 1/4+ε, 1/2-2ε)`,
/// no features. The plain tree sends the root towards the heavier pair and
/// loses `1/4 - 3ε`; the filter tree compares single labels at the root.
pub fn inconsistency_demo(epsilon: f64, population: Population, learner: &LearnerSpec) -> Result<InconsistencyOutcome> {
    if !(epsilon > 0.0 && epsilon < 1.0 / 12.0) {
        return invalid(format!("epsilon must lie in (0, 1/12), got {epsilon}"));
    }
    let p = vec![0.25 + epsilon, 0.25 + epsilon, 0.5 - 2.0 * epsilon];
    let dist = ConditionalDistribution::new(p.clone())?;
    let examples: Vec<Example> = match population {
        Population::Exact => (0..3).map(|y| Example::labeled(Vec::new(), y).with_weight(p[y])).collect(),
        Population::Sampled { n, seed } => {
            if n == 0 {
                return invalid("sampled population needs n > 0");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pick = WeightedIndex::new(&p).expect("probabilities are positive");
            (0..n).map(|_| Example::labeled(Vec::new(), pick.sample(&mut rng))).collect()
        }
    };
    let tree = LabelTree::balanced(3)?;
    let options = TrainOptions::new(learner.clone());
    let t = train_tree(&tree, &examples, &options)?;
    let f = train_filter_tree(&tree, &examples, &options)?;
    let tree_label = predict_label(&t, &[]);
    let ft_label = predict_label(&f, &[]);
    let mut warnings = t.warnings.clone();
    warnings.extend(f.warnings.iter().cloned());
    Ok(InconsistencyOutcome {
        epsilon,
        tree_label,
        ft_label,
        tree_regret: dist.label_regret(tree_label),
        ft_regret: dist.label_regret(ft_label),
        tree_error: 1.0 - p[tree_label],
        probabilities: p,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_regrets_are_exact() {
        let r = inconsistency_demo(0.05, Population::Exact, &LearnerSpec::bayes_oracle()).unwrap();
        assert!((r.tree_regret - 0.1).abs() < 1e-12);
        assert!((r.tree_error - 0.7).abs() < 1e-12);
        assert_eq!(r.ft_regret, 0.0);
        assert_eq!(r.ft_label, 2);
    }

    #[test]
    fn regret_vanishes_at_the_boundary() {
        let r = inconsistency_demo(1.0 / 12.0 - 1e-6, Population::Exact, &LearnerSpec::bayes_oracle()).unwrap();
        assert!(r.tree_regret < 1e-5);
    }

    #[test]
    fn rejects_out_of_range_epsilon() {
        for e in [0.0, -0.1, 1.0 / 12.0, 0.5] {
            assert!(inconsistency_demo(e, Population::Exact, &LearnerSpec::bayes_oracle()).is_err());
        }
    }

    #[test]
    fn logistic_sampled_run() {
        let r = inconsistency_demo(0.05, Population::Sampled { n: 20_000, seed: 3 }, &LearnerSpec::default()).unwrap();
        assert!((r.tree_regret - 0.1).abs() <= 0.02, "{r:?}");
        assert!(r.ft_regret <= 0.01, "{r:?}");
    }
}
