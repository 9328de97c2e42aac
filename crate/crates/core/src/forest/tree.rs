use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Split rule stored at an internal node. Child order is fixed per variant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum SplitSpec {
    /// Children: `[value <= threshold, value > threshold]`.
    Continuous { var: usize, threshold: f64 },
    /// One-vs-rest on a nominal code. Children: `[== category, != category]`.
    Category { var: usize, category: u32 },
    /// Children: `[measured & v <= t, measured & v > t, missing & aux <= t', missing & aux > t']`.
    MnarFourWay { var: usize, measured_threshold: f64, aux_var: usize, aux_threshold: f64 },
    /// Children: `[v=0 & aux <= t0, v=0 & aux > t0, v=1 & aux <= t1, v=1 & aux > t1]`.
    BinaryFourWay { var: usize, aux_var: usize, aux_threshold_0: f64, aux_threshold_1: f64 },
}

impl SplitSpec {
    pub fn var(&self) -> usize {
        match *self {
            SplitSpec::Continuous { var, .. }
            | SplitSpec::Category { var, .. }
            | SplitSpec::MnarFourWay { var, .. }
            | SplitSpec::BinaryFourWay { var, .. } => var,
        }
    }

    pub fn aux_var(&self) -> Option<usize> {
        match *self {
            SplitSpec::MnarFourWay { aux_var, .. } | SplitSpec::BinaryFourWay { aux_var, .. } => Some(aux_var),
            _ => None,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            SplitSpec::Continuous { .. } | SplitSpec::Category { .. } => 2,
            SplitSpec::MnarFourWay { .. } | SplitSpec::BinaryFourWay { .. } => 4,
        }
    }

    pub fn is_four_way(&self) -> bool {
        self.arity() == 4
    }

    /// Variable credited for mass moving through the child at `position`:
    /// the aux variable for the missing pair of an MNAR split, otherwise the
    /// split variable.
    pub fn credited_var(&self, position: usize) -> usize {
        match *self {
            SplitSpec::MnarFourWay { aux_var, .. } if position >= 2 => aux_var,
            _ => self.var(),
        }
    }

    /// Child position for a row. `value(var)` returns `None` for masked
    /// cells; `sizes` are training-row counts per child, used to send masked
    /// values to the larger side (ties to the lower position).
    pub fn child_position(&self, value: impl Fn(usize) -> Option<f64>, sizes: &[usize]) -> usize {
        let larger = |a: usize, b: usize| if sizes[b] > sizes[a] { b } else { a };
        let side = |v: Option<f64>, t: f64, lo: usize| match v {
            Some(x) if x <= t => lo,
            Some(_) => lo + 1,
            None => larger(lo, lo + 1),
        };
        match *self {
            SplitSpec::Continuous { var, threshold } => side(value(var), threshold, 0),
            SplitSpec::Category { var, category } => match value(var) {
                Some(x) if x == category as f64 => 0,
                Some(_) => 1,
                None => larger(0, 1),
            },
            SplitSpec::MnarFourWay { var, measured_threshold, aux_var, aux_threshold } => match value(var) {
                Some(x) => side(Some(x), measured_threshold, 0),
                None => side(value(aux_var), aux_threshold, 2),
            },
            SplitSpec::BinaryFourWay { var, aux_var, aux_threshold_0, aux_threshold_1 } => {
                let branch = match value(var) {
                    Some(x) => x > 0.5,
                    None => sizes[2] + sizes[3] > sizes[0] + sizes[1],
                };
                if branch {
                    side(value(aux_var), aux_threshold_1, 2)
                } else {
                    side(value(aux_var), aux_threshold_0, 0)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum NodeKind {
    Internal { split: SplitSpec, children: Vec<usize> },
    Leaf { rows: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Node {
    pub parent: Option<usize>,
    /// Weight of the edge to the parent; unused at the root.
    pub edge_weight: f64,
    pub depth: usize,
    /// Training rows that reached this node.
    pub n_rows: usize,
    pub kind: NodeKind,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn children(&self) -> &[usize] {
        match &self.kind {
            NodeKind::Internal { children, .. } => children,
            NodeKind::Leaf { .. } => &[],
        }
    }

    pub fn split(&self) -> Option<&SplitSpec> {
        match &self.kind {
            NodeKind::Internal { split, .. } => Some(split),
            NodeKind::Leaf { .. } => None,
        }
    }
}

/// Rooted tree shape: enough to evaluate path lengths and subtree masses.
///
/// Node 0 is the root and every parent index is smaller than its
/// children's.
pub trait TreeShape {
    fn node_count(&self) -> usize;
    fn parent(&self, node: usize) -> Option<usize>;
    fn edge_weight(&self, node: usize) -> f64;
    fn children(&self, node: usize) -> &[usize];

    fn is_leaf(&self, node: usize) -> bool {
        self.children(node).is_empty()
    }

    /// Leaves in depth-first order, so each subtree's leaves are contiguous.
    fn leaves_dfs(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let ch = self.children(n);
            if ch.is_empty() {
                out.push(n);
            } else {
                stack.extend(ch.iter().rev());
            }
        }
        out
    }

    /// Sum of edge weights from the root to every node.
    fn root_distances(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.node_count()];
        for n in 1..self.node_count() {
            let p = self.parent(n).expect("non-root node has a parent");
            d[n] = d[p] + self.edge_weight(n);
        }
        d
    }
}

/// One fitted tree. Nodes are stored in depth-first pre-order, root first.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MuralTree {
    nodes: Vec<Node>,
}

impl MuralTree {
    pub(crate) fn from_nodes(nodes: Vec<Node>) -> Self {
        MuralTree { nodes }
    }

    /// Builds a tree from explicit nodes, checked against training rows
    /// `0..n_rows`.
    pub fn new(nodes: Vec<Node>, n_rows: usize) -> Result<Self> {
        let tree = MuralTree { nodes };
        tree.validate(n_rows)?;
        Ok(tree)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf())
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Leaf reached by a row (`None` marks a masked cell).
    pub fn route(&self, row: &[Option<f64>]) -> usize {
        self.route_with(|v| row[v])
    }

    pub(crate) fn route_with(&self, value: impl Fn(usize) -> Option<f64>) -> usize {
        let mut at = 0;
        let mut sizes = [0usize; 4];
        loop {
            match &self.nodes[at].kind {
                NodeKind::Leaf { .. } => return at,
                NodeKind::Internal { split, children } => {
                    for (s, &c) in sizes.iter_mut().zip(children) {
                        *s = self.nodes[c].n_rows;
                    }
                    at = children[split.child_position(&value, &sizes[..children.len()])];
                }
            }
        }
    }

    /// Copy with every edge weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> MuralTree {
        let mut t = self.clone();
        for n in t.nodes.iter_mut().skip(1) {
            n.edge_weight *= factor;
        }
        t
    }

    /// Checks parent/child links, depths and the leaf partition of training
    /// rows `0..n_rows`.
    pub fn validate(&self, n_rows: usize) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::Dataset(m));
        if self.nodes.is_empty() || self.nodes[0].parent.is_some() || self.nodes[0].depth != 0 {
            return bad("malformed root".into());
        }
        let mut seen = vec![false; n_rows];
        for (i, n) in self.nodes.iter().enumerate() {
            match &n.kind {
                NodeKind::Internal { split, children } => {
                    if children.len() != split.arity() {
                        return bad(format!("node {i}: {} children for arity {}", children.len(), split.arity()));
                    }
                    let mut total = 0;
                    for &c in children {
                        let child = self.nodes.get(c).ok_or(Error::Dataset(format!("node {i}: child {c} missing")))?;
                        if c <= i || child.parent != Some(i) || child.depth != n.depth + 1 {
                            return bad(format!("node {i}: inconsistent child {c}"));
                        }
                        total += child.n_rows;
                    }
                    if total != n.n_rows {
                        return bad(format!("node {i}: children hold {total} rows of {}", n.n_rows));
                    }
                }
                NodeKind::Leaf { rows } => {
                    if rows.len() != n.n_rows {
                        return bad(format!("leaf {i}: row count mismatch"));
                    }
                    for &r in rows {
                        if r >= n_rows || seen[r] {
                            return bad(format!("leaf {i}: row {r} out of range or duplicated"));
                        }
                        seen[r] = true;
                    }
                }
            }
        }
        if let Some(r) = seen.iter().position(|s| !s) {
            return bad(format!("row {r} is in no leaf"));
        }
        Ok(())
    }
}

impl TreeShape for MuralTree {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn parent(&self, node: usize) -> Option<usize> {
        self.nodes[node].parent
    }

    fn edge_weight(&self, node: usize) -> f64 {
        self.nodes[node].edge_weight
    }

    fn children(&self, node: usize) -> &[usize] {
        self.nodes[node].children()
    }
}

/// A bare weighted rooted tree without split rules.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    parents: Vec<Option<usize>>,
    weights: Vec<f64>,
    children: Vec<Vec<usize>>,
}

impl Topology {
    /// `parents[0]` must be `None`; every other parent index must be smaller
    /// than the node's own index.
    pub fn new(parents: Vec<Option<usize>>, weights: Vec<f64>) -> Result<Self> {
        if parents.is_empty() || parents[0].is_some() || weights.len() != parents.len() {
            return Err(Error::Dimension(format!("{} parents, {} weights", parents.len(), weights.len())));
        }
        let mut children = vec![Vec::new(); parents.len()];
        for (i, p) in parents.iter().enumerate().skip(1) {
            match *p {
                Some(p) if p < i => children[p].push(i),
                _ => return Err(Error::Dimension(format!("node {i} needs a parent with a smaller index"))),
            }
        }
        Ok(Topology { parents, weights, children })
    }
}

impl TreeShape for Topology {
    fn node_count(&self) -> usize {
        self.parents.len()
    }

    fn parent(&self, node: usize) -> Option<usize> {
        self.parents[node]
    }

    fn edge_weight(&self, node: usize) -> f64 {
        self.weights[node]
    }

    fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }
}
