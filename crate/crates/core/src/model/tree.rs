use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Reference to a child of an internal node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChildRef {
    Leaf(usize),
    Node(usize),
}

/// One binary merge.
///
/// The leaves below a node occupy the contiguous run `span` of the tree's
/// leaf order (the left-first depth-first order), which keeps memory linear
/// even for deep chains.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub height: f64,
    pub left: ChildRef,
    pub right: ChildRef,
    span: (usize, usize),
}

impl TreeNode {
    pub fn size(&self) -> usize {
        self.span.1 - self.span.0
    }
}

/// Binary agglomeration tree. Internal nodes are stored in merge order, so
/// the root is the last node and children always precede their parents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeRepr", into = "TreeRepr")]
pub struct DendroTree {
    n_leaves: usize,
    nodes: Vec<TreeNode>,
    order: Vec<usize>,
    position: Vec<usize>,
    parent: Vec<Option<usize>>,
    leaf_parent: Vec<Option<usize>>,
}

impl DendroTree {
    /// Builds a tree from merges listed bottom-up. Each merge may only refer
    /// to leaves or to earlier merges, and every child must be used once.
    pub fn from_merges(n_leaves: usize, merges: Vec<(ChildRef, ChildRef, f64)>) -> Result<Self> {
        if n_leaves == 0 {
            return Err(domain("a tree needs at least one leaf"));
        }
        if merges.len() + 1 != n_leaves {
            return Err(domain(format!(
                "{} merges cannot join {n_leaves} leaves",
                merges.len()
            )));
        }
        let mut leaf_parent = vec![None; n_leaves];
        let mut parent = vec![None; merges.len()];
        for (k, &(l, r, h)) in merges.iter().enumerate() {
            if !h.is_finite() {
                return Err(domain("non-finite merge height"));
            }
            for c in [l, r] {
                let slot = match c {
                    ChildRef::Leaf(i) if i < n_leaves => &mut leaf_parent[i],
                    ChildRef::Node(j) if j < k => &mut parent[j],
                    _ => return Err(domain(format!("merge {k} refers to invalid child {c:?}"))),
                };
                if slot.is_some() {
                    return Err(domain(format!("child {c:?} merged twice")));
                }
                *slot = Some(k);
            }
        }
        let mut nodes: Vec<TreeNode> = merges
            .iter()
            .map(|&(left, right, height)| TreeNode {
                height,
                left,
                right,
                span: (0, 0),
            })
            .collect();
        for (k, node) in nodes.iter().enumerate() {
            for c in [node.left, node.right] {
                if let ChildRef::Node(j) = c {
                    if merges[j].2 > node.height {
                        return Err(domain(format!(
                            "merge {k} at height {} lies below its child {j}",
                            node.height
                        )));
                    }
                }
            }
        }

        // Left-first depth-first leaf order; spans follow from subtree sizes.
        let mut order = Vec::with_capacity(n_leaves);
        if nodes.is_empty() {
            order.push(0);
        } else {
            let root = nodes.len() - 1;
            let mut stack = vec![(ChildRef::Node(root), false)];
            while let Some((c, expanded)) = stack.pop() {
                match c {
                    ChildRef::Leaf(i) => order.push(i),
                    ChildRef::Node(j) if expanded => {
                        let lo = nodes[j].span.0;
                        nodes[j].span = (lo, order.len());
                    }
                    ChildRef::Node(j) => {
                        nodes[j].span = (order.len(), 0);
                        stack.push((c, true));
                        stack.push((nodes[j].right, false));
                        stack.push((nodes[j].left, false));
                    }
                }
            }
        }
        let mut position = vec![0; n_leaves];
        for (p, &leaf) in order.iter().enumerate() {
            position[leaf] = p;
        }
        Ok(DendroTree {
            n_leaves,
            nodes,
            order,
            position,
            parent,
            leaf_parent,
        })
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn root(&self) -> ChildRef {
        if self.nodes.is_empty() {
            ChildRef::Leaf(0)
        } else {
            ChildRef::Node(self.nodes.len() - 1)
        }
    }

    /// Height of the root merge.
    pub fn height(&self) -> Result<f64> {
        self.nodes
            .last()
            .map(|n| n.height)
            .ok_or_else(|| domain("a single-leaf tree has no height"))
    }

    /// Left-first depth-first order of the leaves.
    pub fn leaf_order(&self) -> &[usize] {
        &self.order
    }

    /// Positions (in [`leaf_order`](Self::leaf_order)) of the leaves below `c`.
    pub fn span(&self, c: ChildRef) -> Range<usize> {
        match c {
            ChildRef::Leaf(i) => self.position[i]..self.position[i] + 1,
            ChildRef::Node(j) => self.nodes[j].span.0..self.nodes[j].span.1,
        }
    }

    /// Leaves below `c`, in leaf order.
    pub fn leaves(&self, c: ChildRef) -> &[usize] {
        &self.order[self.span(c)]
    }

    /// Leaves below `c`, ascending.
    pub fn leaf_set(&self, c: ChildRef) -> Vec<usize> {
        let mut v = self.leaves(c).to_vec();
        v.sort_unstable();
        v
    }

    pub fn parent(&self, c: ChildRef) -> Option<usize> {
        match c {
            ChildRef::Leaf(i) => self.leaf_parent[i],
            ChildRef::Node(j) => self.parent[j],
        }
    }

    /// Smallest subtree containing every leaf in `leaves`.
    pub fn smallest_containing(&self, leaves: &[usize]) -> Result<ChildRef> {
        let (&first, _) = leaves
            .split_first()
            .ok_or_else(|| domain("empty leaf set"))?;
        if let Some(&bad) = leaves.iter().find(|&&l| l >= self.n_leaves) {
            return Err(domain(format!("leaf {bad} not in tree")));
        }
        let lo = leaves.iter().map(|&l| self.position[l]).min().unwrap_or(0);
        let hi = leaves.iter().map(|&l| self.position[l]).max().unwrap_or(0) + 1;
        let mut cur = ChildRef::Leaf(first);
        loop {
            let s = self.span(cur);
            if s.start <= lo && hi <= s.end {
                return Ok(cur);
            }
            match self.parent(cur) {
                Some(p) => cur = ChildRef::Node(p),
                None => return Ok(cur),
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NodeRepr {
    height: f64,
    left: ChildRef,
    right: ChildRef,
    leaves: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    n_leaves: usize,
    nodes: Vec<NodeRepr>,
    root: ChildRef,
}

impl From<DendroTree> for TreeRepr {
    fn from(t: DendroTree) -> Self {
        let nodes = (0..t.nodes.len())
            .map(|j| {
                let n = &t.nodes[j];
                NodeRepr {
                    height: n.height,
                    left: n.left,
                    right: n.right,
                    leaves: t.leaf_set(ChildRef::Node(j)),
                }
            })
            .collect();
        TreeRepr {
            n_leaves: t.n_leaves,
            root: t.root(),
            nodes,
        }
    }
}

impl TryFrom<TreeRepr> for DendroTree {
    type Error = Error;

    fn try_from(r: TreeRepr) -> Result<Self> {
        let merges = r.nodes.iter().map(|n| (n.left, n.right, n.height)).collect();
        let t = DendroTree::from_merges(r.n_leaves, merges)?;
        if t.root() != r.root {
            return Err(domain("root does not match the last merge"));
        }
        for (j, n) in r.nodes.iter().enumerate() {
            if t.leaf_set(ChildRef::Node(j)) != n.leaves {
                return Err(domain(format!("leaf set of node {j} is inconsistent")));
            }
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ChildRef::{Leaf, Node};

    fn three() -> DendroTree {
        DendroTree::from_merges(3, vec![(Leaf(0), Leaf(1), 1.0), (Node(0), Leaf(2), 10.0)]).unwrap()
    }

    #[test]
    fn spans_and_leaves() {
        let t = three();
        assert_eq!(t.leaves(Node(1)), &[0, 1, 2]);
        assert_eq!(t.leaves(Node(0)), &[0, 1]);
        assert_eq!(t.height().unwrap(), 10.0);
        assert_eq!(t.parent(Leaf(2)), Some(1));
        assert_eq!(t.smallest_containing(&[1, 0]).unwrap(), Node(0));
        assert_eq!(t.smallest_containing(&[0, 2]).unwrap(), Node(1));
        assert_eq!(t.smallest_containing(&[2]).unwrap(), Leaf(2));
    }

    #[test]
    fn single_leaf() {
        let t = DendroTree::from_merges(1, vec![]).unwrap();
        assert_eq!(t.root(), Leaf(0));
        assert!(t.height().is_err());
    }

    #[test]
    fn rejects_malformed() {
        assert!(DendroTree::from_merges(2, vec![(Leaf(0), Leaf(0), 1.0)]).is_err());
        assert!(DendroTree::from_merges(3, vec![(Leaf(0), Leaf(1), 1.0)]).is_err());
        assert!(DendroTree::from_merges(
            3,
            vec![(Leaf(0), Leaf(1), 2.0), (Node(0), Leaf(2), 1.0)]
        )
        .is_err());
        assert!(DendroTree::from_merges(2, vec![(Leaf(0), Node(0), 1.0)]).is_err());
    }

    #[test]
    fn non_contiguous_leaf_sets() {
        let t = DendroTree::from_merges(
            4,
            vec![
                (Leaf(0), Leaf(2), 0.5),
                (Leaf(1), Leaf(3), 0.7),
                (Node(0), Node(1), 2.0),
            ],
        )
        .unwrap();
        assert_eq!(t.leaf_set(Node(0)), vec![0, 2]);
        assert_eq!(t.leaf_order(), &[0, 2, 1, 3]);
        assert_eq!(t.smallest_containing(&[3, 1]).unwrap(), Node(1));
        assert_eq!(t.smallest_containing(&[0, 1]).unwrap(), Node(2));
    }
}
