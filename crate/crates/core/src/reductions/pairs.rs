use rayon::prelude::*;

use super::train::{check_examples, fit_node};
use super::{NodeClassifierSet, ReductionKind, ReductionModel, TrainOptions, TrainingCounters};
use crate::domain::{Child, Example, LabelTree, WeightedBinaryExample};
use crate::error::{Error, Result};
use crate::learners::BinaryClassifier;

pub fn pair_count(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// Row-major index of the pair `i < j` among all `k(k-1)/2` pairs.
pub fn pair_index(k: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < k);
    i * (2 * k - i - 1) / 2 + (j - i - 1)
}

fn finish(
    kind: ReductionKind,
    k: usize,
    tree: Option<LabelTree>,
    sets: Vec<Vec<WeightedBinaryExample>>,
    fitted: Vec<(BinaryClassifier, Vec<String>)>,
    touches: usize,
) -> ReductionModel {
    let counters = TrainingCounters {
        examples_per_node: sets.iter().map(Vec::len).collect(),
        weight_per_node: sets.iter().map(|s| s.iter().map(|e| e.weight).sum()).collect(),
        oracle_calls: sets.len(),
        max_touches_per_example: touches,
    };
    let mut warnings = Vec::new();
    let mut classifiers = Vec::with_capacity(fitted.len());
    for (c, w) in fitted {
        classifiers.push(c);
        warnings.extend(w);
    }
    ReductionModel {
        kind,
        k,
        tree,
        classifiers: NodeClassifierSet::Pairs { k, classifiers },
        counters,
        warnings,
        labels: None,
        feature_names: None,
    }
}

fn pair_name(k: usize, idx: usize) -> String {
    let mut rest = idx;
    for i in 0..k {
        let row = k - i - 1;
        if rest < row {
            return format!("pair ({i},{})", i + 1 + rest);
        }
        rest -= row;
    }
    format!("pair #{idx}")
}

/// One classifier per label pair, trained on the examples of those two labels.
pub fn train_all_pairs(k: usize, examples: &[Example], options: &TrainOptions) -> Result<ReductionModel> {
    if options.shared_classifier {
        return Err(Error::InvalidArgument("all-pairs does not support a shared classifier".into()));
    }
    check_examples(examples, k, true)?;
    let mut sets = vec![Vec::new(); pair_count(k)];
    for e in examples {
        let y = e.label().unwrap();
        for other in (0..k).filter(|&o| o != y) {
            let (i, j) = (y.min(other), y.max(other));
            let label = u8::from(y == j);
            sets[pair_index(k, i, j)].push(WeightedBinaryExample {
                features: e.features.clone(),
                label,
                weight: e.weight,
            });
        }
    }
    let fitted = sets
        .par_iter()
        .enumerate()
        .map(|(idx, s)| fit_node(options, s, &pair_name(k, idx), idx as u64))
        .collect::<Result<Vec<_>>>()?;
    let touches = if examples.is_empty() { 0 } else { k - 1 };
    Ok(finish(ReductionKind::AllPairs, k, None, sets, fitted, touches))
}

/// All-pairs filter tree: pair classifiers indexed by the least common
/// ancestor of the pair, trained level by level on the examples whose label
/// won its own subtree, against whichever label the other subtree produces.
pub fn train_apft(tree: &LabelTree, examples: &[Example], options: &TrainOptions) -> Result<ReductionModel> {
    if options.shared_classifier {
        return Err(Error::InvalidArgument("APFT does not support a shared classifier".into()));
    }
    tree.validate()?;
    let k = tree.k();
    check_examples(examples, k, true)?;
    let n = tree.num_internal();
    let mut classifiers: Vec<Option<BinaryClassifier>> = vec![None; pair_count(k)];
    let mut sets: Vec<Vec<WeightedBinaryExample>> = vec![Vec::new(); pair_count(k)];
    let mut fitted_all: Vec<Option<(BinaryClassifier, Vec<String>)>> = vec![None; pair_count(k)];
    let mut winners: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut touches = vec![0usize; examples.len()];

    for level in tree.levels() {
        let input = |c: Child, i: usize, winners: &[Vec<u32>]| -> usize {
            match c {
                Child::Leaf(y) => y,
                Child::Node(id) => winners[id][i] as usize,
            }
        };
        let mut level_pairs = Vec::new();
        for &id in &level {
            let node = tree.node(id);
            let left = match node.left {
                Child::Leaf(y) => vec![y],
                Child::Node(c) => tree.leafset(c).to_vec(),
            };
            let right = match node.right {
                Child::Leaf(y) => vec![y],
                Child::Node(c) => tree.leafset(c).to_vec(),
            };
            for &a in &left {
                for &b in &right {
                    level_pairs.push(pair_index(k, a.min(b), a.max(b)));
                }
            }
            for (i, e) in examples.iter().enumerate() {
                let y = e.label().unwrap();
                let a = input(node.left, i, &winners);
                let b = input(node.right, i, &winners);
                // bit 0 selects the label from the left subtree
                let label = if a == y {
                    0
                } else if b == y {
                    1
                } else {
                    continue;
                };
                touches[i] += 1;
                sets[pair_index(k, a.min(b), a.max(b))].push(WeightedBinaryExample {
                    features: e.features.clone(),
                    label,
                    weight: e.weight,
                });
            }
        }
        let fitted: Vec<_> = level_pairs
            .par_iter()
            .map(|&idx| fit_node(options, &sets[idx], &pair_name(k, idx), idx as u64))
            .collect::<Result<_>>()?;
        for (&idx, f) in level_pairs.iter().zip(fitted) {
            classifiers[idx] = Some(f.0.clone());
            fitted_all[idx] = Some(f);
        }
        for &id in &level {
            let node = tree.node(id);
            let w: Vec<u32> = examples
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let a = input(node.left, i, &winners);
                    let b = input(node.right, i, &winners);
                    let c = classifiers[pair_index(k, a.min(b), a.max(b))].as_ref().unwrap();
                    (if c.predict(&e.features) == 0 { a } else { b }) as u32
                })
                .collect();
            winners[id] = w;
        }
    }
    let fitted = fitted_all
        .into_iter()
        .map(|f| f.expect("every pair has a least common ancestor"))
        .collect();
    let touches = touches.into_iter().max().unwrap_or(0);
    Ok(finish(ReductionKind::Apft, k, Some(tree.clone()), sets, fitted, touches))
}
