use serde::{Deserialize, Serialize};

use crate::domain::{Child, LabelTree, NodeId, Side};

/// Second-phase tree over the `m` first-phase winners. Slot `i` holds the
/// winner of tournament `i + 1`; slots sit left to right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargedFinalTree {
    m: usize,
    /// `None` when `m = 1`: the single winner passes straight through.
    tree: Option<LabelTree>,
}

impl ChargedFinalTree {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "final tree needs at least one slot");
        let tree = (m >= 2).then(|| LabelTree::balanced(m).expect("m >= 2"));
        Self { m, tree }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tree(&self) -> Option<&LabelTree> {
        self.tree.as_ref()
    }

    pub fn num_nodes(&self) -> usize {
        self.m - 1
    }

    pub fn charge_of(&self, child: Child) -> u32 {
        match child {
            Child::Leaf(_) => 1,
            Child::Node(id) => self.tree.as_ref().unwrap().leafset(id).len() as u32,
        }
    }

    pub fn charges(&self, node: NodeId) -> (u32, u32) {
        let n = self.tree.as_ref().expect("m >= 2").node(node);
        (self.charge_of(n.left), self.charge_of(n.right))
    }

    /// Importance charged when the label arriving from `winner` advances:
    /// the charge of the opposite subtree. The winner of A has to beat the
    /// winner of B `c_B` times.
    pub fn outcome_weight(&self, node: NodeId, winner: Side) -> u32 {
        let (ca, cb) = self.charges(node);
        match winner {
            Side::Left => cb,
            Side::Right => ca,
        }
    }

    /// Longest possible series when the node is played as repeated games:
    /// the left label needs `c_B` wins, the right one `c_A`.
    pub fn repeated_games(&self, node: NodeId) -> u32 {
        let (ca, cb) = self.charges(node);
        ca + cb - 1
    }

    /// Worst-case sum of outcome weights along any leaf-to-root path.
    pub fn max_path_importance(&self) -> u32 {
        self.max_path(|t, node, side| t.outcome_weight(node, side))
    }

    /// Worst-case number of games along any leaf-to-root path in repeated mode.
    pub fn max_path_repeated(&self) -> u32 {
        self.max_path(|t, node, _| t.repeated_games(node))
    }

    fn max_path(&self, cost: impl Fn(&Self, NodeId, Side) -> u32) -> u32 {
        let Some(tree) = &self.tree else { return 0 };
        (0..self.m)
            .map(|slot| {
                tree.path_to_root(slot)
                    .into_iter()
                    .map(|n| cost(self, n, tree.side_of(n, slot)))
                    .sum()
            })
            .max()
            .unwrap_or(0)
    }

    /// Rounds taken by each level of the final phase, lowest level first.
    pub fn level_durations(&self, repeated: bool) -> Vec<u32> {
        let Some(tree) = &self.tree else { return Vec::new() };
        tree.levels()
            .iter()
            .map(|level| {
                if repeated {
                    level.iter().map(|&n| self.repeated_games(n)).max().unwrap_or(1)
                } else {
                    1
                }
            })
            .collect()
    }
}

/// Rounds of the final phase in the bracketed m-elimination construction,
/// where the i-th winner must get through `i - 1` extra games.
pub fn bracketed_final_rounds(m: usize) -> usize {
    m * (m - 1) / 2
}
