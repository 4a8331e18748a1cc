//! Binary and importance-weighted binary learners.
//!
//! Every learner consumes [`WeightedBinaryExample`]s; unweighted data simply
//! carries weight 1. Label 0 is the left input of a node and is the tie
//! default everywhere.

mod costing;
mod logistic;
mod stump;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{context_key, WeightedBinaryExample};
use crate::error::{invalid, Error, Result};

pub use costing::{costing_resample, CostingConfig, Normalization, Resampled};
pub use logistic::LogisticModel;
pub use stump::Stump;

pub const DEFAULT_LR: f64 = 0.1;
pub const DEFAULT_EPOCHS: usize = 10;
pub const DEFAULT_SEED: u64 = 42;

/// Known `P(y = 1 | x)` per enumerable context.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<(Vec<f64>, f64)>", into = "Vec<(Vec<f64>, f64)>")]
pub struct OracleTable {
    entries: BTreeMap<Vec<u64>, (Vec<f64>, f64)>,
}

impl OracleTable {
    pub fn insert(&mut self, features: Vec<f64>, p_one: f64) {
        self.entries.insert(context_key(&features), (features, p_one));
    }

    pub fn get(&self, features: &[f64]) -> Option<f64> {
        self.entries.get(&context_key(features)).map(|(_, p)| *p)
    }
}

impl From<Vec<(Vec<f64>, f64)>> for OracleTable {
    fn from(v: Vec<(Vec<f64>, f64)>) -> Self {
        let mut t = OracleTable::default();
        for (x, p) in v {
            t.insert(x, p);
        }
        t
    }
}

impl From<OracleTable> for Vec<(Vec<f64>, f64)> {
    fn from(t: OracleTable) -> Self {
        t.entries.into_values().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    LogisticSgd { lr: f64, epochs: usize, seed: u64 },
    DecisionStump,
    Constant { bit: u8 },
    /// Returns the Bayes-optimal decision. With a table, the supplied
    /// conditionals are used; without one, the conditionals are read off the
    /// training set itself, which is exact when that set is an
    /// exact-population sample (one weighted row per context and label).
    BayesOracle { table: Option<OracleTable> },
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec::LogisticSgd {
            lr: DEFAULT_LR,
            epochs: DEFAULT_EPOCHS,
            seed: DEFAULT_SEED,
        }
    }
}

impl LearnerSpec {
    pub fn bayes_oracle() -> Self {
        LearnerSpec::BayesOracle { table: None }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::LogisticSgd { lr, epochs, .. } => {
                if !(lr.is_finite() && *lr > 0.0) {
                    return invalid(format!("learning rate must be positive, got {lr}"));
                }
                if *epochs == 0 {
                    return invalid("epochs must be positive");
                }
                Ok(())
            }
            LearnerSpec::Constant { bit } if *bit > 1 => invalid("constant bit must be 0 or 1"),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::LogisticSgd { .. } => "logistic_sgd",
            LearnerSpec::DecisionStump => "decision_stump",
            LearnerSpec::Constant { .. } => "constant",
            LearnerSpec::BayesOracle { .. } => "bayes_oracle",
        }
    }

    /// Same learner with its seed replaced, used to give each node its own stream.
    pub fn reseeded(&self, seed: u64) -> Self {
        match self {
            LearnerSpec::LogisticSgd { lr, epochs, .. } => LearnerSpec::LogisticSgd {
                lr: *lr,
                epochs: *epochs,
                seed,
            },
            other => other.clone(),
        }
    }
}

/// Exact per-context decision table. Unknown contexts get `default`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "TruthTableRepr", into = "TruthTableRepr")]
pub struct TruthTable {
    entries: BTreeMap<Vec<u64>, u8>,
    pub default: u8,
}

#[derive(Serialize, Deserialize)]
struct TruthTableRepr {
    default: u8,
    entries: Vec<(Vec<u64>, u8)>,
}

impl From<TruthTableRepr> for TruthTable {
    fn from(r: TruthTableRepr) -> Self {
        TruthTable {
            entries: r.entries.into_iter().collect(),
            default: r.default,
        }
    }
}

impl From<TruthTable> for TruthTableRepr {
    fn from(t: TruthTable) -> Self {
        TruthTableRepr {
            default: t.default,
            entries: t.entries.into_iter().collect(),
        }
    }
}

impl TruthTable {
    pub fn new(default: u8) -> Self {
        Self {
            entries: BTreeMap::new(),
            default,
        }
    }

    pub fn set(&mut self, features: &[f64], bit: u8) {
        self.entries.insert(context_key(features), bit);
    }

    pub fn predict(&self, features: &[f64]) -> u8 {
        self.entries
            .get(&context_key(features))
            .copied()
            .unwrap_or(self.default)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BinaryClassifier {
    Constant { bit: u8 },
    Logistic(LogisticModel),
    Stump(Stump),
    TruthTable(TruthTable),
}

impl BinaryClassifier {
    pub fn constant_left() -> Self {
        BinaryClassifier::Constant { bit: 0 }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        match self {
            BinaryClassifier::Constant { bit } => *bit,
            BinaryClassifier::Logistic(m) => m.predict(x),
            BinaryClassifier::Stump(s) => s.predict(x),
            BinaryClassifier::TruthTable(t) => t.predict(x),
        }
    }
}

pub fn predict(classifier: &BinaryClassifier, x: &[f64]) -> u8 {
    classifier.predict(x)
}

fn check_data(data: &[WeightedBinaryExample]) -> Result<usize> {
    let dim = data.first().map_or(0, |e| e.features.len());
    for e in data {
        if e.features.len() != dim {
            return Err(Error::TrainingData(format!(
                "feature length {} differs from {dim}",
                e.features.len()
            )));
        }
        if e.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("binary example features"));
        }
        if !e.weight.is_finite() || e.weight < 0.0 {
            return Err(Error::TrainingData(format!("importance weight {} is invalid", e.weight)));
        }
    }
    Ok(dim)
}

/// Per-context weighted vote; ties go to 0.
fn majority_table(data: &[WeightedBinaryExample]) -> TruthTable {
    let mut votes: BTreeMap<Vec<u64>, (f64, f64)> = BTreeMap::new();
    for e in data {
        let v = votes.entry(context_key(&e.features)).or_default();
        if e.label == 1 {
            v.1 += e.weight;
        } else {
            v.0 += e.weight;
        }
    }
    TruthTable {
        entries: votes
            .into_iter()
            .map(|(k, (w0, w1))| (k, u8::from(w1 > w0)))
            .collect(),
        default: 0,
    }
}

/// Trains a classifier. Importance weights are honored natively by every kind.
pub fn learn(spec: &LearnerSpec, data: &[WeightedBinaryExample]) -> Result<BinaryClassifier> {
    spec.validate()?;
    let dim = check_data(data)?;
    let trainable = !matches!(
        spec,
        LearnerSpec::Constant { .. } | LearnerSpec::BayesOracle { table: Some(_) }
    );
    if trainable && data.is_empty() {
        return Err(Error::TrainingData(format!("{} needs a nonempty training set", spec.name())));
    }
    Ok(match spec {
        LearnerSpec::Constant { bit } => BinaryClassifier::Constant { bit: *bit },
        LearnerSpec::LogisticSgd { lr, epochs, seed } => {
            BinaryClassifier::Logistic(logistic::fit(data, dim, *lr, *epochs, *seed))
        }
        LearnerSpec::DecisionStump => match stump::fit(data, dim) {
            stump::StumpFit::Constant(bit) => BinaryClassifier::Constant { bit },
            stump::StumpFit::Split(s) => BinaryClassifier::Stump(s),
        },
        LearnerSpec::BayesOracle { table: Some(table) } => {
            let mut t = TruthTable::new(0);
            for (x, p) in table.entries.values() {
                t.set(x, u8::from(*p > 0.5));
            }
            BinaryClassifier::TruthTable(t)
        }
        LearnerSpec::BayesOracle { table: None } => BinaryClassifier::TruthTable(majority_table(data)),
    })
}

/// `Σ w·1(pred ≠ y) / Σ w`.
pub fn weighted_error(classifier: &BinaryClassifier, data: &[WeightedBinaryExample]) -> Result<f64> {
    let total: f64 = data.iter().map(|e| e.weight).sum();
    if total <= 0.0 {
        return Err(Error::UndefinedWeightedError);
    }
    let wrong: f64 = data
        .iter()
        .filter(|e| classifier.predict(&e.features) != e.label)
        .map(|e| e.weight)
        .sum();
    Ok(wrong / total)
}

/// Smallest weighted error achievable by any function of the context,
/// i.e. the optimum over all truth tables.
pub fn truth_table_optimum(data: &[WeightedBinaryExample]) -> Result<f64> {
    let total: f64 = data.iter().map(|e| e.weight).sum();
    if total <= 0.0 {
        return Err(Error::UndefinedWeightedError);
    }
    let mut votes: BTreeMap<Vec<u64>, (f64, f64)> = BTreeMap::new();
    for e in data {
        let v = votes.entry(context_key(&e.features)).or_default();
        if e.label == 1 {
            v.1 += e.weight;
        } else {
            v.0 += e.weight;
        }
    }
    Ok(votes.values().map(|(a, b)| a.min(*b)).sum::<f64>() / total)
}

/// Weighted error minus the error of the comparison-class optimum `best`.
pub fn weighted_regret(classifier: &BinaryClassifier, data: &[WeightedBinaryExample], best: f64) -> Result<f64> {
    Ok(weighted_error(classifier, data)? - best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wb(x: Vec<f64>, y: u8, w: f64) -> WeightedBinaryExample {
        WeightedBinaryExample::new(x, y, w).unwrap()
    }

    #[test]
    fn separable_logistic_has_zero_training_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut data = Vec::new();
        while data.len() < 400 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let y: f64 = rng.gen_range(-1.0..1.0);
            let s = x + 2.0 * y;
            // keep a margin around the separating line
            if s.abs() < 0.3 {
                continue;
            }
            data.push(wb(vec![x, y], u8::from(s > 0.0), 1.0));
        }
        let c = learn(&LearnerSpec::default(), &data).unwrap();
        assert_eq!(weighted_error(&c, &data).unwrap(), 0.0);
    }

    #[test]
    fn oracle_follows_supplied_conditional() {
        let mut table = OracleTable::default();
        table.insert(vec![3.0], 0.7);
        table.insert(vec![4.0], 0.2);
        let c = learn(&LearnerSpec::BayesOracle { table: Some(table) }, &[]).unwrap();
        assert_eq!(c.predict(&[3.0]), 1);
        assert_eq!(c.predict(&[4.0]), 0);
    }

    #[test]
    fn oracle_without_table_reads_population() {
        let data = vec![wb(vec![1.0], 1, 0.3), wb(vec![1.0], 0, 0.2), wb(vec![2.0], 1, 0.1), wb(vec![2.0], 0, 0.1)];
        let c = learn(&LearnerSpec::bayes_oracle(), &data).unwrap();
        assert_eq!(c.predict(&[1.0]), 1);
        // tie goes left
        assert_eq!(c.predict(&[2.0]), 0);
    }

    #[test]
    fn stump_recovers_threshold() {
        let data: Vec<_> = (0..=100)
            .map(|i| {
                let x = i as f64 / 100.0;
                wb(vec![x], u8::from(x > 0.5), 1.0)
            })
            .collect();
        match learn(&LearnerSpec::DecisionStump, &data).unwrap() {
            BinaryClassifier::Stump(s) => {
                assert_eq!(s.feature, 0);
                assert_eq!(s.above, 1);
                assert!((s.threshold - 0.5).abs() <= 0.01);
            }
            other => panic!("expected a stump, got {other:?}"),
        }
    }

    #[test]
    fn stump_respects_weights() {
        // the heavy point decides the constant
        let data = vec![wb(vec![0.0], 1, 5.0), wb(vec![0.0], 0, 1.0)];
        let c = learn(&LearnerSpec::DecisionStump, &data).unwrap();
        assert_eq!(c, BinaryClassifier::Constant { bit: 1 });
    }

    #[test]
    fn rejects_nonfinite_and_empty() {
        let bad = vec![wb(vec![f64::NAN], 1, 1.0)];
        assert!(matches!(learn(&LearnerSpec::default(), &bad), Err(Error::NonFinite(_))));
        assert!(matches!(learn(&LearnerSpec::default(), &[]), Err(Error::TrainingData(_))));
        assert!(learn(&LearnerSpec::Constant { bit: 1 }, &[]).is_ok());
        let bad_lr = LearnerSpec::LogisticSgd { lr: 0.0, epochs: 1, seed: 0 };
        assert!(bad_lr.validate().is_err());
    }

    #[test]
    fn weighted_error_arithmetic() {
        let data = vec![wb(vec![0.0], 1, 1.0), wb(vec![1.0], 1, 3.0)];
        let wrong = BinaryClassifier::Constant { bit: 0 };
        let right = BinaryClassifier::Constant { bit: 1 };
        assert_eq!(weighted_error(&right, &data).unwrap(), 0.0);
        assert_eq!(weighted_error(&wrong, &data).unwrap(), 1.0);
        let best = truth_table_optimum(&data).unwrap();
        assert_eq!(best, 0.0);
        assert_eq!(weighted_regret(&wrong, &data, best).unwrap(), 1.0);
        assert!(matches!(
            weighted_error(&right, &[wb(vec![0.0], 1, 0.0)]),
            Err(Error::UndefinedWeightedError)
        ));
    }

    #[test]
    fn random_truth_tables_never_beat_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut data = Vec::new();
            for ctx in 0..20 {
                for y in 0..2u8 {
                    data.push(wb(vec![ctx as f64], y, rng.gen::<f64>()));
                }
            }
            let best = truth_table_optimum(&data).unwrap();
            // brute-force optimum: per context, the cheaper of the two constant answers
            let mut brute = 0.0;
            for ctx in 0..20 {
                let w0 = data[2 * ctx].weight;
                let w1 = data[2 * ctx + 1].weight;
                brute += w0.min(w1);
            }
            let total: f64 = data.iter().map(|e| e.weight).sum();
            assert!((best - brute / total).abs() < 1e-12);
            let mut table = TruthTable::new(0);
            for ctx in 0..20 {
                table.set(&[ctx as f64], rng.gen_range(0..2));
            }
            let r = weighted_regret(&BinaryClassifier::TruthTable(table), &data, best).unwrap();
            assert!(r >= -1e-12);
        }
    }

    #[test]
    fn logistic_is_seed_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<_> = (0..100)
            .map(|_| {
                let x: f64 = rng.gen();
                wb(vec![x], u8::from(rng.gen::<f64>() < x), 1.0)
            })
            .collect();
        let a = learn(&LearnerSpec::default(), &data).unwrap();
        let b = learn(&LearnerSpec::default(), &data).unwrap();
        assert_eq!(a, b);
    }
}
