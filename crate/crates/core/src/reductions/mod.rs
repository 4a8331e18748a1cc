//! Multiclass and cost-sensitive reductions to binary classification:
//! the divide-and-conquer tree, the filter tree, the cost-sensitive filter
//! tree, all-pairs and the all-pairs filter tree.

mod pairs;
mod persist;
mod train;

use serde::{Deserialize, Serialize};

use crate::domain::{Child, LabelTree, NodeId, Side};
use crate::error::{invalid, Result};
use crate::learners::{BinaryClassifier, CostingConfig, LearnerSpec};

pub use pairs::{pair_count, pair_index, train_all_pairs, train_apft};
pub use persist::{load_model, model_from_json, model_to_json, save_model, MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use train::{train_cs_filter_tree, train_filter_tree, train_filter_tree_traced, train_tree, FilterTrace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionKind {
    Tree,
    FilterTree,
    CsFilterTree,
    AllPairs,
    Apft,
}

impl ReductionKind {
    pub fn name(self) -> &'static str {
        match self {
            ReductionKind::Tree => "tree",
            ReductionKind::FilterTree => "filter_tree",
            ReductionKind::CsFilterTree => "cs_filter_tree",
            ReductionKind::AllPairs => "all_pairs",
            ReductionKind::Apft => "apft",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "tree" => ReductionKind::Tree,
            "filter_tree" | "ft" => ReductionKind::FilterTree,
            "cs_filter_tree" | "csft" => ReductionKind::CsFilterTree,
            "all_pairs" | "ap" => ReductionKind::AllPairs,
            "apft" => ReductionKind::Apft,
            other => return invalid(format!("unknown reduction kind '{other}'")),
        })
    }
}

/// How node classifiers are obtained during training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub learner: LearnerSpec,
    /// Rejection-sample importance-weighted node sets before learning.
    pub costing: Option<CostingConfig>,
    /// One classifier for all nodes, with a one-hot node indicator appended
    /// to the features. Tree-shaped reductions only.
    pub shared_classifier: bool,
}

impl TrainOptions {
    pub fn new(learner: LearnerSpec) -> Self {
        Self {
            learner,
            costing: None,
            shared_classifier: false,
        }
    }

    pub fn with_costing(mut self, cfg: CostingConfig) -> Self {
        self.costing = Some(cfg);
        self
    }

    pub fn shared(mut self) -> Self {
        self.shared_classifier = true;
        self
    }
}

/// The binary decision functions of a trained reduction.
///
/// For tree-shaped reductions bit 0 picks the left input of a node. For
/// pair classifiers bit 0 picks the lower label (all-pairs) or the label
/// from the left subtree of the pair's least common ancestor (APFT).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backing", rename_all = "snake_case")]
pub enum NodeClassifierSet {
    PerNode { classifiers: Vec<BinaryClassifier> },
    Shared { classifier: BinaryClassifier, num_nodes: usize },
    Pairs { k: usize, classifiers: Vec<BinaryClassifier> },
}

impl NodeClassifierSet {
    /// Explicit constant decision per node, used by brute-force sweeps.
    pub fn from_decisions(decisions: &[Side]) -> Self {
        NodeClassifierSet::PerNode {
            classifiers: decisions
                .iter()
                .map(|s| BinaryClassifier::Constant { bit: s.bit() })
                .collect(),
        }
    }

    pub fn node_decision(&self, node: NodeId, x: &[f64]) -> Side {
        match self {
            NodeClassifierSet::PerNode { classifiers } => Side::from_bit(classifiers[node].predict(x)),
            NodeClassifierSet::Shared { classifier, num_nodes } => {
                Side::from_bit(classifier.predict(&with_node_feature(x, node, *num_nodes)))
            }
            NodeClassifierSet::Pairs { .. } => panic!("pair classifiers have no per-node decision"),
        }
    }

    /// Winner of a comparison between two labels under pair classifiers.
    /// `first` is the label that bit 0 selects.
    pub fn pair_decision(&self, first: usize, second: usize, x: &[f64]) -> usize {
        match self {
            NodeClassifierSet::Pairs { k, classifiers } => {
                let c = &classifiers[pair_index(*k, first.min(second), first.max(second))];
                if c.predict(x) == 0 {
                    first
                } else {
                    second
                }
            }
            _ => panic!("per-node classifiers cannot compare arbitrary pairs"),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            NodeClassifierSet::PerNode { classifiers } | NodeClassifierSet::Pairs { classifiers, .. } => {
                classifiers.len()
            }
            NodeClassifierSet::Shared { num_nodes, .. } => *num_nodes,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub(crate) fn with_node_feature(x: &[f64], node: NodeId, num_nodes: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(x.len() + num_nodes);
    v.extend_from_slice(x);
    v.extend((0..num_nodes).map(|n| if n == node { 1.0 } else { 0.0 }));
    v
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingCounters {
    /// Binary examples handed to the learner, per node or per pair.
    pub examples_per_node: Vec<usize>,
    /// Total importance handed to the learner, per node or per pair.
    pub weight_per_node: Vec<f64>,
    /// Calls into the binary learner.
    pub oracle_calls: usize,
    /// Largest number of times a single multiclass example was offered to a node.
    pub max_touches_per_example: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionModel {
    pub kind: ReductionKind,
    pub k: usize,
    /// Absent only for all-pairs.
    pub tree: Option<LabelTree>,
    pub classifiers: NodeClassifierSet,
    pub counters: TrainingCounters,
    pub warnings: Vec<String>,
    /// Original label names by index, when trained from a named dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// Feature column names seen in training, checked again at prediction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_names: Option<Vec<String>>,
}

impl ReductionModel {
    /// Tree-shaped model from explicit classifiers, with no training history.
    pub fn from_parts(kind: ReductionKind, tree: LabelTree, classifiers: NodeClassifierSet) -> Result<Self> {
        if matches!(kind, ReductionKind::AllPairs) {
            return invalid("all-pairs models have no tree");
        }
        let expected = match kind {
            ReductionKind::Apft => pair_count(tree.k()),
            _ => tree.num_internal(),
        };
        if classifiers.len() != expected {
            return invalid(format!(
                "expected {expected} classifiers, got {}",
                classifiers.len()
            ));
        }
        Ok(Self {
            kind,
            k: tree.k(),
            tree: Some(tree),
            classifiers,
            counters: TrainingCounters::default(),
            warnings: Vec::new(),
            labels: None,
            feature_names: None,
        })
    }
}

/// Result of decoding one feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub label: usize,
    /// Nodes from the root down to the predicted leaf, with the side each
    /// node prefers. Empty for all-pairs.
    pub path: Vec<(NodeId, Side)>,
    /// Binary classifier evaluations spent.
    pub evaluations: usize,
}

pub fn decode(model: &ReductionModel, x: &[f64]) -> Decoded {
    match model.kind {
        ReductionKind::Tree | ReductionKind::FilterTree | ReductionKind::CsFilterTree => {
            let tree = model.tree.as_ref().expect("tree-shaped model");
            let mut node = tree.root();
            let mut path = Vec::with_capacity(tree.depth());
            loop {
                let side = model.classifiers.node_decision(node, x);
                path.push((node, side));
                match tree.node(node).child(side) {
                    Child::Leaf(y) => {
                        let evaluations = path.len();
                        return Decoded { label: y, path, evaluations };
                    }
                    Child::Node(c) => node = c,
                }
            }
        }
        ReductionKind::Apft => {
            let tree = model.tree.as_ref().expect("APFT model has a tree");
            let winners = apft_winners(tree, &model.classifiers, x);
            let label = winners[tree.root()];
            let mut path: Vec<(NodeId, Side)> = tree
                .path_to_root(label)
                .into_iter()
                .map(|n| (n, tree.side_of(n, label)))
                .collect();
            path.reverse();
            Decoded {
                label,
                path,
                evaluations: tree.num_internal(),
            }
        }
        ReductionKind::AllPairs => {
            let k = model.k;
            let mut votes = vec![0usize; k];
            for i in 0..k {
                for j in i + 1..k {
                    votes[model.classifiers.pair_decision(i, j, x)] += 1;
                }
            }
            let best = *votes.iter().max().unwrap();
            let label = votes.iter().position(|&v| v == best).unwrap();
            Decoded {
                label,
                path: Vec::new(),
                evaluations: pair_count(k),
            }
        }
    }
}

/// Bottom-up winner of every node when each comparison consults the
/// classifier of the pair that actually arrives.
pub(crate) fn apft_winners(tree: &LabelTree, classifiers: &NodeClassifierSet, x: &[f64]) -> Vec<usize> {
    let mut winners = vec![0usize; tree.num_internal()];
    let input = |winners: &[usize], c: Child| match c {
        Child::Leaf(y) => y,
        Child::Node(n) => winners[n],
    };
    for id in 0..tree.num_internal() {
        let n = tree.node(id);
        let a = input(&winners, n.left);
        let b = input(&winners, n.right);
        winners[id] = classifiers.pair_decision(a, b, x);
    }
    winners
}

pub fn predict_label(model: &ReductionModel, x: &[f64]) -> usize {
    decode(model, x).label
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_labels_constant_left_decodes_zero() {
        let tree = LabelTree::balanced(2).unwrap();
        let model = ReductionModel::from_parts(
            ReductionKind::FilterTree,
            tree,
            NodeClassifierSet::from_decisions(&[Side::Left]),
        )
        .unwrap();
        let d = decode(&model, &[0.0]);
        assert_eq!(d.label, 0);
        assert_eq!(d.evaluations, 1);
    }

    #[test]
    fn eight_labels_decode_in_three_evaluations() {
        let tree = LabelTree::balanced(8).unwrap();
        for mask in 0u32..128 {
            let decisions: Vec<Side> = (0..7).map(|i| Side::from_bit(((mask >> i) & 1) as u8)).collect();
            let model = ReductionModel::from_parts(
                ReductionKind::FilterTree,
                tree.clone(),
                NodeClassifierSet::from_decisions(&decisions),
            )
            .unwrap();
            let d = decode(&model, &[]);
            assert_eq!(d.evaluations, 3);
            // every classifier on the path prefers the returned leaf
            for (node, side) in &d.path {
                assert_eq!(tree.side_of(*node, d.label), *side);
                assert_eq!(decisions[*node], *side);
            }
        }
    }

    #[test]
    fn from_parts_checks_sizes() {
        let tree = LabelTree::balanced(4).unwrap();
        assert!(ReductionModel::from_parts(
            ReductionKind::FilterTree,
            tree,
            NodeClassifierSet::from_decisions(&[Side::Left])
        )
        .is_err());
    }

    #[test]
    fn kind_names_parse() {
        for kind in [
            ReductionKind::Tree,
            ReductionKind::FilterTree,
            ReductionKind::CsFilterTree,
            ReductionKind::AllPairs,
            ReductionKind::Apft,
        ] {
            assert_eq!(ReductionKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(ReductionKind::parse("ecoc").is_err());
    }
}
