use rayon::prelude::*;

use super::{with_node_feature, NodeClassifierSet, ReductionKind, ReductionModel, TrainOptions, TrainingCounters};
use crate::domain::{Child, Example, LabelTree, NodeId, WeightedBinaryExample};
use crate::error::{Error, Result};
use crate::learners::{costing_resample, learn, BinaryClassifier, CostingConfig};

/// Which multiclass examples were offered to each node during filtered training.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FilterTrace {
    pub members: Vec<Vec<usize>>,
}

pub(crate) fn check_examples(examples: &[Example], k: usize, need_labels: bool) -> Result<usize> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let dim = examples.first().map_or(0, |e| e.features.len());
    for e in examples {
        e.validate(k)?;
        if e.features.len() != dim {
            return Err(Error::TrainingData(format!(
                "feature length {} differs from {dim}",
                e.features.len()
            )));
        }
        if need_labels && e.label().is_none() {
            return Err(Error::TrainingData("this reduction needs labeled examples".into()));
        }
    }
    Ok(dim)
}

/// Fits one node, falling back to constant-left when nothing is left to learn from.
pub(crate) fn fit_node(
    options: &TrainOptions,
    data: &[WeightedBinaryExample],
    what: &str,
    costing_offset: u64,
) -> Result<(BinaryClassifier, Vec<String>)> {
    let mut warnings = Vec::new();
    if data.is_empty() {
        let w = format!("{what}: empty training set, using constant-left");
        log::warn!("{w}");
        warnings.push(w);
        return Ok((BinaryClassifier::constant_left(), warnings));
    }
    match &options.costing {
        None => Ok((learn(&options.learner, data)?, warnings)),
        Some(cfg) => {
            let cfg = CostingConfig {
                seed: cfg.seed.wrapping_add(costing_offset),
                ..*cfg
            };
            let resampled = costing_resample(data, &cfg)?;
            warnings.extend(resampled.warnings.into_iter().map(|w| format!("{what}: {w}")));
            if resampled.examples.is_empty() {
                let w = format!("{what}: costing kept no examples, using constant-left");
                log::warn!("{w}");
                warnings.push(w);
                return Ok((BinaryClassifier::constant_left(), warnings));
            }
            Ok((learn(&options.learner, &resampled.examples)?, warnings))
        }
    }
}

fn bin(x: &[f64], label: u8, weight: f64) -> WeightedBinaryExample {
    WeightedBinaryExample {
        features: x.to_vec(),
        label,
        weight,
    }
}

fn augmented(set: &[WeightedBinaryExample], node: NodeId, num_nodes: usize) -> Vec<WeightedBinaryExample> {
    set.iter()
        .map(|e| WeightedBinaryExample {
            features: with_node_feature(&e.features, node, num_nodes),
            label: e.label,
            weight: e.weight,
        })
        .collect()
}

/// Unfiltered divide-and-conquer tree: every node sees every example whose
/// label lies under it.
pub fn train_tree(tree: &LabelTree, examples: &[Example], options: &TrainOptions) -> Result<ReductionModel> {
    tree.validate()?;
    check_examples(examples, tree.k(), true)?;
    let n = tree.num_internal();
    let mut sets: Vec<Vec<WeightedBinaryExample>> = vec![Vec::new(); n];
    let mut touches = 0;
    for e in examples {
        let y = e.label().unwrap();
        let path = tree.path_to_root(y);
        touches = touches.max(path.len());
        for node in path {
            sets[node].push(bin(&e.features, tree.side_of(node, y).bit(), e.weight));
        }
    }
    let mut counters = TrainingCounters {
        examples_per_node: sets.iter().map(Vec::len).collect(),
        weight_per_node: sets.iter().map(|s| s.iter().map(|e| e.weight).sum()).collect(),
        oracle_calls: 0,
        max_touches_per_example: touches,
    };
    let mut warnings = Vec::new();
    let classifiers = if options.shared_classifier {
        let union: Vec<_> = sets
            .iter()
            .enumerate()
            .flat_map(|(id, s)| augmented(s, id, n))
            .collect();
        let (c, w) = fit_node(options, &union, "shared classifier", 0)?;
        counters.oracle_calls = 1;
        warnings.extend(w);
        NodeClassifierSet::Shared {
            classifier: c,
            num_nodes: n,
        }
    } else {
        let fitted: Vec<_> = sets
            .par_iter()
            .enumerate()
            .map(|(id, s)| fit_node(options, s, &format!("node {id}"), id as u64))
            .collect::<Result<_>>()?;
        counters.oracle_calls = n;
        let mut classifiers = Vec::with_capacity(n);
        for (c, w) in fitted {
            classifiers.push(c);
            warnings.extend(w);
        }
        NodeClassifierSet::PerNode { classifiers }
    };
    Ok(ReductionModel {
        kind: ReductionKind::Tree,
        k: tree.k(),
        tree: Some(tree.clone()),
        classifiers,
        counters,
        warnings,
        labels: None,
        feature_names: None,
    })
}

/// Filter tree: a node is trained only on examples whose label won every
/// comparison below it, under the classifiers already trained.
pub fn train_filter_tree(tree: &LabelTree, examples: &[Example], options: &TrainOptions) -> Result<ReductionModel> {
    train_filter_tree_traced(tree, examples, options).map(|(m, _)| m)
}

pub fn train_filter_tree_traced(
    tree: &LabelTree,
    examples: &[Example],
    options: &TrainOptions,
) -> Result<(ReductionModel, FilterTrace)> {
    check_examples(examples, tree.k(), true)?;
    train_levels(tree, examples, options, ReductionKind::FilterTree)
}

/// Cost-sensitive filter tree. Each node compares the two labels its
/// subtrees currently produce and learns, with importance `|c_a - c_b|`,
/// which of them is cheaper. Labeled examples count as 0/1 costs.
pub fn train_cs_filter_tree(tree: &LabelTree, examples: &[Example], options: &TrainOptions) -> Result<ReductionModel> {
    check_examples(examples, tree.k(), false)?;
    train_levels(tree, examples, options, ReductionKind::CsFilterTree).map(|(m, _)| m)
}

fn train_levels(
    tree: &LabelTree,
    examples: &[Example],
    options: &TrainOptions,
    kind: ReductionKind,
) -> Result<(ReductionModel, FilterTrace)> {
    tree.validate()?;
    let n = tree.num_internal();
    let count = examples.len();
    // winners[node][i]: label produced by `node` for example i; dropped once the parent is trained
    let mut winners: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut trace = FilterTrace {
        members: vec![Vec::new(); n],
    };
    let mut touches = vec![0usize; count];
    let mut counters = TrainingCounters {
        examples_per_node: vec![0; n],
        weight_per_node: vec![0.0; n],
        ..Default::default()
    };
    let mut warnings = Vec::new();
    let mut per_node: Vec<Option<BinaryClassifier>> = vec![None; n];
    let mut shared: Option<BinaryClassifier> = None;
    let mut shared_union: Vec<WeightedBinaryExample> = Vec::new();

    for level in tree.levels() {
        let input = |c: Child, i: usize, winners: &[Vec<u32>]| -> usize {
            match c {
                Child::Leaf(y) => y,
                Child::Node(id) => winners[id][i] as usize,
            }
        };
        let mut sets: Vec<Vec<WeightedBinaryExample>> = Vec::with_capacity(level.len());
        for &id in &level {
            let node = tree.node(id);
            let mut set = Vec::new();
            for (i, e) in examples.iter().enumerate() {
                let a = input(node.left, i, &winners);
                let b = input(node.right, i, &winners);
                let entry = match kind {
                    ReductionKind::FilterTree => {
                        let y = e.label().unwrap();
                        if a == y {
                            Some((0, e.weight))
                        } else if b == y {
                            Some((1, e.weight))
                        } else {
                            None
                        }
                    }
                    _ => {
                        let (ca, cb) = (e.cost_of(a), e.cost_of(b));
                        (ca != cb).then(|| (u8::from(cb < ca), (ca - cb).abs() * e.weight))
                    }
                };
                if let Some((label, weight)) = entry {
                    set.push(bin(&e.features, label, weight));
                    trace.members[id].push(i);
                    touches[i] += 1;
                }
            }
            counters.examples_per_node[id] = set.len();
            counters.weight_per_node[id] = set.iter().map(|e| e.weight).sum();
            sets.push(set);
        }

        if options.shared_classifier {
            for (&id, set) in level.iter().zip(&sets) {
                shared_union.extend(augmented(set, id, n));
            }
            let (c, w) = fit_node(options, &shared_union, "shared classifier", level[0] as u64)?;
            counters.oracle_calls += 1;
            warnings.extend(w);
            shared = Some(c);
        } else {
            let fitted: Vec<_> = level
                .par_iter()
                .zip(sets.par_iter())
                .map(|(&id, set)| fit_node(options, set, &format!("node {id}"), id as u64))
                .collect::<Result<_>>()?;
            counters.oracle_calls += level.len();
            for (&id, (c, w)) in level.iter().zip(fitted) {
                per_node[id] = Some(c);
                warnings.extend(w);
            }
        }

        let decided: Vec<Vec<u32>> = level
            .par_iter()
            .map(|&id| {
                let node = tree.node(id);
                examples
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        let bit = match &shared {
                            Some(c) => c.predict(&with_node_feature(&e.features, id, n)),
                            None => per_node[id].as_ref().unwrap().predict(&e.features),
                        };
                        let child = if bit == 0 { node.left } else { node.right };
                        input(child, i, &winners) as u32
                    })
                    .collect()
            })
            .collect();
        for (&id, w) in level.iter().zip(decided) {
            winners[id] = w;
            for c in [tree.node(id).left, tree.node(id).right] {
                if let Child::Node(cid) = c {
                    winners[cid] = Vec::new();
                }
            }
        }
    }

    counters.max_touches_per_example = touches.into_iter().max().unwrap_or(0);
    let classifiers = match shared {
        Some(classifier) => NodeClassifierSet::Shared {
            classifier,
            num_nodes: n,
        },
        None => NodeClassifierSet::PerNode {
            classifiers: per_node.into_iter().map(Option::unwrap).collect(),
        },
    };
    Ok((
        ReductionModel {
            kind,
            k: tree.k(),
            tree: Some(tree.clone()),
            classifiers,
            counters,
            warnings,
            labels: None,
            feature_names: None,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ConditionalDistribution, CostVector};
    use crate::learners::LearnerSpec;
    use crate::reductions::decode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn population(p: &[f64]) -> Vec<Example> {
        p.iter()
            .enumerate()
            .map(|(y, &w)| Example::labeled(vec![0.0], y).with_weight(w))
            .collect()
    }

    fn oracle() -> TrainOptions {
        TrainOptions::new(LearnerSpec::bayes_oracle())
    }

    #[test]
    fn unfiltered_tree_is_inconsistent_filter_tree_is_not() {
        let tree = LabelTree::parse("((0,1),2)").unwrap();
        let data = population(&[0.3, 0.3, 0.4]);
        let t = train_tree(&tree, &data, &oracle()).unwrap();
        let f = train_filter_tree(&tree, &data, &oracle()).unwrap();
        assert_eq!(decode(&t, &[0.0]).label, 0);
        assert_eq!(decode(&f, &[0.0]).label, 2);
    }

    #[test]
    fn oracle_filter_tree_recovers_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() + 0.01).collect();
            let s: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let best = ConditionalDistribution::new(p.clone()).unwrap().argmax();
            let tree = LabelTree::balanced(4).unwrap();
            let m = train_filter_tree(&tree, &population(&p), &oracle()).unwrap();
            assert_eq!(decode(&m, &[0.0]).label, best);
        }
    }

    #[test]
    fn oracle_cs_filter_tree_recovers_cheapest_expected_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let costs: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.gen::<f64>()).collect()).collect();
            let probs = [0.2, 0.5, 0.3];
            let data: Vec<Example> = costs
                .iter()
                .zip(probs)
                .map(|(c, p)| Example::costed(vec![1.0], CostVector::new(c.clone()).unwrap()).with_weight(p))
                .collect();
            let expected: Vec<f64> = (0..4)
                .map(|y| costs.iter().zip(probs).map(|(c, p)| p * c[y]).sum())
                .collect();
            let best = (0..4)
                .min_by(|&a, &b| expected[a].total_cmp(&expected[b]))
                .unwrap();
            let tree = LabelTree::balanced(4).unwrap();
            let m = train_cs_filter_tree(&tree, &data, &oracle()).unwrap();
            let got = decode(&m, &[1.0]).label;
            assert!((expected[got] - expected[best]).abs() < 1e-12);
        }
    }

    #[test]
    fn filtering_shrinks_toward_the_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<Example> = (0..300)
            .map(|_| {
                let x = vec![rng.gen::<f64>(), rng.gen::<f64>()];
                let y = ((x[0] * 3.0) as usize + (x[1] * 2.0) as usize) % 6;
                Example::labeled(x, y)
            })
            .collect();
        let tree = LabelTree::balanced(6).unwrap();
        let (model, trace) =
            train_filter_tree_traced(&tree, &data, &TrainOptions::new(LearnerSpec::DecisionStump)).unwrap();
        for (id, node) in tree.nodes().iter().enumerate() {
            let mut below: Vec<usize> = Vec::new();
            for c in [node.left, node.right] {
                match c {
                    Child::Leaf(y) => below.extend((0..data.len()).filter(|&i| data[i].label() == Some(y))),
                    Child::Node(cid) => below.extend(&trace.members[cid]),
                }
            }
            below.sort();
            for i in &trace.members[id] {
                assert!(below.binary_search(i).is_ok());
            }
        }
        assert!(model.counters.max_touches_per_example <= tree.depth());
    }

    #[test]
    fn empty_node_gets_constant_left_and_warning() {
        let tree = LabelTree::balanced(4).unwrap();
        let data = vec![Example::labeled(vec![0.0], 0), Example::labeled(vec![1.0], 1)];
        let m = train_filter_tree(&tree, &data, &oracle()).unwrap();
        assert!(!m.warnings.is_empty());
        assert_eq!(decode(&m, &[0.0]).label, 0);
    }

    #[test]
    fn zero_cost_gaps_are_skipped() {
        let tree = LabelTree::balanced(2).unwrap();
        let data = vec![Example::costed(vec![0.0], CostVector::new(vec![0.5, 0.5]).unwrap())];
        let m = train_cs_filter_tree(&tree, &data, &oracle()).unwrap();
        assert_eq!(m.counters.examples_per_node, vec![0]);
    }

    #[test]
    fn shared_classifier_matches_per_node_oracle() {
        let tree = LabelTree::parse("((0,1),2)").unwrap();
        let data = population(&[0.3, 0.3, 0.4]);
        let m = train_filter_tree(&tree, &data, &oracle().shared()).unwrap();
        assert!(matches!(m.classifiers, NodeClassifierSet::Shared { .. }));
        assert_eq!(decode(&m, &[0.0]).label, 2);
    }

    #[test]
    fn labels_required_for_multiclass_reductions() {
        let tree = LabelTree::balanced(2).unwrap();
        let data = vec![Example::costed(vec![0.0], CostVector::new(vec![0.1, 0.5]).unwrap())];
        assert!(train_filter_tree(&tree, &data, &oracle()).is_err());
        assert!(train_cs_filter_tree(&tree, &data, &oracle()).is_ok());
    }
}
