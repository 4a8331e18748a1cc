//! Shared domain types: label trees, conditional distributions, cost
//! vectors, examples and the audit counters used by the cost-sensitive
//! analysis.

mod distribution;
mod example;
mod tree;

use serde::{Deserialize, Serialize};

pub use distribution::{label_regrets, ConditionalDistribution, CostVector, PROB_TOLERANCE};
pub use example::{context_key, Example, Target, WeightedBinaryExample};
pub use tree::{ceil_log2, ceil_pow2, floor_pow2, Child, InternalNode, LabelTree, NodeId, Shape, Side};

/// Per-cost-vector audit of a filter tree evaluation.
///
/// `s_t` sums `|c_a - c_b|` over all nodes, `i_t` sums it over the nodes where
/// the costlier input advanced, and `c_t` is the cost of the tree's winner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditCounters {
    pub s_t: f64,
    pub i_t: f64,
    pub c_t: f64,
}
