use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Index of an internal node in a [`LabelTree`].
pub type NodeId = usize;

/// Which child of an internal node a label lives under, or which input a
/// binary decision picks. Encoded as a bit: left = 0, right = 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn bit(self) -> u8 {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Side {
        if bit == 0 {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Child {
    Leaf(usize),
    Node(NodeId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InternalNode {
    pub left: Child,
    pub right: Child,
    pub parent: Option<NodeId>,
    /// Sorted labels under this node.
    leaves: Vec<usize>,
    /// Longest distance to a leaf; children always have a smaller height.
    height: usize,
}

impl InternalNode {
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn child(&self, side: Side) -> Child {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }
}

/// Binary tree over the labels `0..k`.
///
/// Internal nodes are stored so that every child has a smaller id than its
/// parent; iterating ids in increasing order therefore visits nodes from the
/// leaves towards the root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelTree {
    k: usize,
    nodes: Vec<InternalNode>,
    leaf_parent: Vec<NodeId>,
}

/// Nested description of a tree, used by [`LabelTree::from_shape`] and the
/// textual form `((0,1),2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    Leaf(usize),
    Node(Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn node(left: Shape, right: Shape) -> Shape {
        Shape::Node(Box::new(left), Box::new(right))
    }
}

impl LabelTree {
    /// Balanced tree with leaves `0..k` left to right. Each split puts the
    /// larger half on the left, so the right-most subtree is the shallow one
    /// whenever a split is uneven.
    pub fn balanced(k: usize) -> Result<LabelTree> {
        if k < 2 {
            return invalid(format!("a label tree needs k >= 2, got {k}"));
        }
        fn build(lo: usize, hi: usize) -> Shape {
            if hi - lo == 1 {
                return Shape::Leaf(lo);
            }
            let mid = lo + (hi - lo).div_ceil(2);
            Shape::node(build(lo, mid), build(mid, hi))
        }
        LabelTree::from_shape(&build(0, k))
    }

    /// Tree produced by round-by-round pairing: the waiting subtrees are
    /// kept in label order, and in a round with an odd number of them the
    /// first one sits out. Node ids follow the order in which matches are
    /// formed (round by round, left to right), which is the order the first
    /// bracket of a tournament allocates its match ids.
    pub fn paired(k: usize) -> Result<LabelTree> {
        if k < 2 {
            return invalid(format!("a label tree needs k >= 2, got {k}"));
        }
        let mut tree = LabelTree {
            k,
            nodes: Vec::with_capacity(k - 1),
            leaf_parent: vec![usize::MAX; k],
        };
        let mut waiting: Vec<Child> = (0..k).map(Child::Leaf).collect();
        while waiting.len() > 1 {
            let mut next = Vec::with_capacity(waiting.len().div_ceil(2));
            let mut rest = &waiting[..];
            if waiting.len() % 2 == 1 {
                next.push(waiting[0]);
                rest = &waiting[1..];
            }
            for pair in rest.chunks(2) {
                let id = tree.push_node(pair[0], pair[1]);
                next.push(Child::Node(id));
            }
            waiting = next;
        }
        Ok(tree)
    }

    pub fn from_shape(shape: &Shape) -> Result<LabelTree> {
        fn count(shape: &Shape) -> usize {
            match shape {
                Shape::Leaf(_) => 1,
                Shape::Node(l, r) => count(l) + count(r),
            }
        }
        let k = count(shape);
        if k < 2 {
            return invalid("a label tree needs at least two leaves");
        }
        let mut tree = LabelTree {
            k,
            nodes: Vec::with_capacity(k - 1),
            leaf_parent: vec![usize::MAX; k],
        };
        let mut seen = vec![false; k];
        fn walk(tree: &mut LabelTree, seen: &mut [bool], shape: &Shape) -> Result<Child> {
            match shape {
                Shape::Leaf(y) => {
                    if *y >= seen.len() || seen[*y] {
                        return invalid(format!("label {y} is out of range or repeated"));
                    }
                    seen[*y] = true;
                    Ok(Child::Leaf(*y))
                }
                Shape::Node(l, r) => {
                    let left = walk(tree, seen, l)?;
                    let right = walk(tree, seen, r)?;
                    Ok(Child::Node(tree.push_node(left, right)))
                }
            }
        }
        walk(&mut tree, &mut seen, shape)?;
        Ok(tree)
    }

    /// Parses the textual form, e.g. `((0,1),2)`.
    pub fn parse(text: &str) -> Result<LabelTree> {
        let compact: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        fn parse_shape(s: &[char], pos: &mut usize) -> Result<Shape> {
            match s.get(*pos) {
                Some('(') => {
                    *pos += 1;
                    let left = parse_shape(s, pos)?;
                    if s.get(*pos) != Some(&',') {
                        return invalid(format!("expected ',' at offset {pos}"));
                    }
                    *pos += 1;
                    let right = parse_shape(s, pos)?;
                    if s.get(*pos) != Some(&')') {
                        return invalid(format!("expected ')' at offset {pos}"));
                    }
                    *pos += 1;
                    Ok(Shape::node(left, right))
                }
                Some(c) if c.is_ascii_digit() => {
                    let start = *pos;
                    while s.get(*pos).is_some_and(|c| c.is_ascii_digit()) {
                        *pos += 1;
                    }
                    let digits: String = s[start..*pos].iter().collect();
                    let y = digits
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad label '{digits}'")))?;
                    Ok(Shape::Leaf(y))
                }
                _ => invalid(format!("unexpected input at offset {pos}")),
            }
        }
        let shape = parse_shape(&compact, &mut pos)?;
        if pos != compact.len() {
            return invalid("trailing input after tree");
        }
        LabelTree::from_shape(&shape)
    }

    fn push_node(&mut self, left: Child, right: Child) -> NodeId {
        let id = self.nodes.len();
        let mut leaves = Vec::new();
        let mut height = 0;
        for child in [left, right] {
            match child {
                Child::Leaf(y) => {
                    leaves.push(y);
                    self.leaf_parent[y] = id;
                }
                Child::Node(c) => {
                    leaves.extend_from_slice(&self.nodes[c].leaves);
                    height = height.max(self.nodes[c].height);
                    self.nodes[c].parent = Some(id);
                }
            }
        }
        leaves.sort_unstable();
        self.nodes.push(InternalNode {
            left,
            right,
            parent: None,
            leaves,
            height: height + 1,
        });
        id
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_internal(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> NodeId {
        self.nodes.len() - 1
    }

    pub fn node(&self, id: NodeId) -> &InternalNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[InternalNode] {
        &self.nodes
    }

    pub fn leafset(&self, id: NodeId) -> &[usize] {
        &self.nodes[id].leaves
    }

    pub fn contains(&self, id: NodeId, label: usize) -> bool {
        self.nodes[id].leaves.binary_search(&label).is_ok()
    }

    pub fn parent_of_leaf(&self, label: usize) -> NodeId {
        self.leaf_parent[label]
    }

    /// Side of `node` under which `label` sits. `label` must be in the node's leaf set.
    pub fn side_of(&self, node: NodeId, label: usize) -> Side {
        let n = &self.nodes[node];
        let in_left = match n.left {
            Child::Leaf(y) => y == label,
            Child::Node(c) => self.contains(c, label),
        };
        if in_left {
            Side::Left
        } else {
            Side::Right
        }
    }

    /// Internal nodes from the leaf's parent up to the root.
    pub fn path_to_root(&self, label: usize) -> Vec<NodeId> {
        let mut path = vec![self.leaf_parent[label]];
        while let Some(p) = self.nodes[*path.last().unwrap()].parent {
            path.push(p);
        }
        path
    }

    pub fn leaf_depth(&self, label: usize) -> usize {
        self.path_to_root(label).len()
    }

    pub fn depth(&self) -> usize {
        self.nodes[self.root()].height
    }

    /// Internal nodes grouped by height, lowest level first.
    pub fn levels(&self) -> Vec<Vec<NodeId>> {
        let mut levels = vec![Vec::new(); self.depth()];
        for (id, n) in self.nodes.iter().enumerate() {
            levels[n.height - 1].push(id);
        }
        levels
    }

    /// Least common ancestor of two distinct labels.
    pub fn lca(&self, a: usize, b: usize) -> NodeId {
        let mut node = self.leaf_parent[a];
        while !self.contains(node, b) {
            node = self.nodes[node].parent.expect("root contains every label");
        }
        node
    }

    /// Structural self-check of the leaf-set partition invariant.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() + 1 != self.k {
            return invalid("tree must have k-1 internal nodes");
        }
        let mut at_leaf = vec![0usize; self.k];
        for (id, n) in self.nodes.iter().enumerate() {
            let mut union = Vec::new();
            for child in [n.left, n.right] {
                match child {
                    Child::Leaf(y) => {
                        at_leaf[y] += 1;
                        union.push(y);
                    }
                    Child::Node(c) => {
                        if c >= id || self.nodes[c].parent != Some(id) {
                            return invalid(format!("node {c} is not ordered below its parent {id}"));
                        }
                        union.extend_from_slice(&self.nodes[c].leaves);
                    }
                }
            }
            let before = union.len();
            union.sort_unstable();
            union.dedup();
            if union.len() != before || union != n.leaves {
                return invalid(format!("leaf set of node {id} is not a disjoint union of its children"));
            }
        }
        if at_leaf.iter().any(|&c| c != 1) {
            return invalid("every label must appear at exactly one leaf");
        }
        if self.nodes[self.root()].leaves.len() != self.k {
            return invalid("root must cover every label");
        }
        Ok(())
    }
}

impl fmt::Display for LabelTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write(tree: &LabelTree, child: Child, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match child {
                Child::Leaf(y) => write!(f, "{y}"),
                Child::Node(id) => {
                    let n = tree.node(id);
                    write!(f, "(")?;
                    write(tree, n.left, f)?;
                    write!(f, ",")?;
                    write(tree, n.right, f)?;
                    write!(f, ")")
                }
            }
        }
        write(self, Child::Node(self.root()), f)
    }
}

/// Smallest power of two that is at least `m`.
pub fn ceil_pow2(m: usize) -> usize {
    m.max(1).next_power_of_two()
}

/// Largest power of two that is at most `m` (`m >= 1`).
pub fn floor_pow2(m: usize) -> usize {
    assert!(m >= 1);
    1 << (usize::BITS - 1 - m.leading_zeros())
}

/// `⌈log₂ k⌉` for `k >= 1`.
pub fn ceil_log2(k: usize) -> usize {
    ceil_pow2(k).trailing_zeros() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_labels() {
        let t = LabelTree::balanced(2).unwrap();
        assert_eq!(t.num_internal(), 1);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.to_string(), "(0,1)");
    }

    #[test]
    fn eight_labels_complete() {
        let t = LabelTree::balanced(8).unwrap();
        assert_eq!(t.depth(), 3);
        assert_eq!(t.num_internal(), 7);
        assert!((0..8).all(|y| t.leaf_depth(y) == 3));
    }

    #[test]
    fn five_labels_enumerated() {
        let t = LabelTree::balanced(5).unwrap();
        t.validate().unwrap();
        assert_eq!(t.to_string(), "(((0,1),2),(3,4))");
        assert_eq!(t.depth(), 3);
        assert_eq!(t.num_internal(), 4);
        let depths: Vec<usize> = (0..5).map(|y| t.leaf_depth(y)).collect();
        assert_eq!(depths, vec![3, 3, 2, 2, 2]);
    }

    #[test]
    fn rejects_small_k() {
        assert!(matches!(LabelTree::balanced(1), Err(Error::InvalidArgument(_))));
        assert!(LabelTree::balanced(0).is_err());
        assert!(LabelTree::paired(1).is_err());
    }

    #[test]
    fn parse_round_trip() {
        let t = LabelTree::parse("((0, 1), 2)").unwrap();
        assert_eq!(t.to_string(), "((0,1),2)");
        assert_eq!(t.side_of(t.root(), 2), Side::Right);
        assert_eq!(t.side_of(t.root(), 1), Side::Left);
        assert!(LabelTree::parse("((0,1),1)").is_err());
        assert!(LabelTree::parse("((0,1),2").is_err());
    }

    #[test]
    fn paired_gives_bye_to_first() {
        let t = LabelTree::paired(5).unwrap();
        t.validate().unwrap();
        assert_eq!(t.to_string(), "(0,((1,2),(3,4)))");
        assert_eq!(t.depth(), 3);
    }

    #[test]
    fn lca_and_levels() {
        let t = LabelTree::balanced(4).unwrap();
        assert_eq!(t.lca(0, 1), t.parent_of_leaf(0));
        assert_eq!(t.lca(1, 2), t.root());
        let levels = t.levels();
        assert_eq!(levels.len(), 2);
        assert_eq!(levels[0].len(), 2);
        assert_eq!(levels[1], vec![t.root()]);
    }

    #[test]
    fn pow2_helpers() {
        assert_eq!(ceil_pow2(3), 4);
        assert_eq!(ceil_pow2(4), 4);
        assert_eq!(floor_pow2(5), 4);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(1024), 10);
    }
}
