//! Agglomerative clustering of a sorted one-dimensional sample.
//!
//! Only adjacent clusters may merge, so every internal node covers a
//! contiguous run of the sorted values and the tree's leaf order is the
//! sorted order itself. Candidate merges sit in a heap keyed by
//! `(distance, merged size, left position)`; distances within `1e-9` of the
//! sample range count as equal, in which case the smaller merge goes first and
//! then the leftmost one.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{ChildRef, DendroTree, SortedSample};

/// Relative tolerance under which two merge distances are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    #[default]
    Complete,
    Average,
    Ward,
}

impl std::str::FromStr for Linkage {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            "ward" => Ok(Linkage::Ward),
            "single" => Err(domain("single linkage is not supported")),
            other => Err(domain(format!("unknown linkage {other:?}"))),
        }
    }
}

struct Prefix(Vec<f64>);

impl Prefix {
    fn new(x: &[f64]) -> Self {
        let mut p = Vec::with_capacity(x.len() + 1);
        p.push(0.0);
        let mut acc = 0.0;
        for v in x {
            acc += v;
            p.push(acc);
        }
        Prefix(p)
    }

    /// Mean of `x[s..=e]`.
    fn mean(&self, s: usize, e: usize) -> f64 {
        (self.0[e + 1] - self.0[s]) / (e + 1 - s) as f64
    }
}

fn distance(x: &[f64], p: &Prefix, linkage: Linkage, ls: usize, le: usize, re: usize) -> f64 {
    let rs = le + 1;
    match linkage {
        Linkage::Complete => x[re] - x[ls],
        Linkage::Average => (p.mean(rs, re) - p.mean(ls, le)).max(0.0),
        Linkage::Ward => {
            let (nl, nr) = ((le + 1 - ls) as f64, (re + 1 - rs) as f64);
            (2.0 * nl * nr / (nl + nr)).sqrt() * (p.mean(rs, re) - p.mean(ls, le)).max(0.0)
        }
    }
}

/// Clusters the sample; the tree has one leaf per observation (ties included).
pub fn cluster(sample: &SortedSample, linkage: Linkage) -> DendroTree {
    cluster_sorted(sample.values(), linkage).expect("sorted sample is non-empty")
}

/// [`cluster`] on an ascending slice.
pub fn cluster_sorted(x: &[f64], linkage: Linkage) -> Result<DendroTree> {
    let n = x.len();
    if n == 0 {
        return Err(domain("cannot cluster an empty sample"));
    }
    if x.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(domain("values must be ascending and finite"));
    }
    let prefix = Prefix::new(x);
    let tol = TIE_TOLERANCE * (x[n - 1] - x[0]);
    let quantize = |d: f64| if tol > 0.0 { (d / tol).round() as i64 } else { 0 };

    // Clusters are keyed by their first sorted position.
    let mut end: Vec<usize> = (0..n).collect();
    let mut alive = vec![true; n];
    let mut prev: Vec<Option<usize>> = (0..n).map(|i| i.checked_sub(1)).collect();
    let mut node_of: Vec<ChildRef> = (0..n).map(ChildRef::Leaf).collect();
    let mut height_of = vec![0.0f64; n];

    let mut heap = BinaryHeap::with_capacity(n);
    for i in 0..n.saturating_sub(1) {
        let d = distance(x, &prefix, linkage, i, i, i + 1);
        heap.push(Reverse((quantize(d), 2usize, i, i, i + 1)));
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    while let Some(Reverse((_, _, ls, le, re))) = heap.pop() {
        let rs = le + 1;
        if !alive[ls] || end[ls] != le || rs >= n || !alive[rs] || end[rs] != re {
            continue;
        }
        let d = distance(x, &prefix, linkage, ls, le, re);
        let h = d.max(height_of[ls]).max(height_of[rs]);
        merges.push((node_of[ls], node_of[rs], h));
        node_of[ls] = ChildRef::Node(merges.len() - 1);
        height_of[ls] = h;
        end[ls] = re;
        alive[rs] = false;
        if re + 1 < n {
            prev[re + 1] = Some(ls);
            let ne = end[re + 1];
            let d = distance(x, &prefix, linkage, ls, re, ne);
            heap.push(Reverse((quantize(d), ne + 1 - ls, ls, re, ne)));
        }
        if let Some(ps) = prev[ls] {
            let d = distance(x, &prefix, linkage, ps, ls - 1, re);
            heap.push(Reverse((quantize(d), re + 1 - ps, ps, ls - 1, re)));
        }
    }
    DendroTree::from_merges(n, merges)
}

/// Height of the root merge; undefined for a single observation.
pub fn tree_height(tree: &DendroTree) -> Result<f64> {
    tree.height()
}

#[derive(PartialEq)]
struct Active(f64, usize);

impl Eq for Active {}

impl PartialOrd for Active {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Active {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Walks internal nodes from the top down, highest first.
///
/// After a node is yielded the caller may call [`stop`](Self::stop); the
/// node's descendants are then never yielded. Otherwise its internal
/// children become active on the next call to `next`. Equal heights yield
/// the later merge first, so a parent always precedes its children.
pub struct ActiveDescent<'t> {
    tree: &'t DendroTree,
    heap: BinaryHeap<Active>,
    current: Option<usize>,
    stopped: bool,
}

pub fn descend_active(tree: &DendroTree) -> ActiveDescent<'_> {
    let mut heap = BinaryHeap::new();
    if let ChildRef::Node(r) = tree.root() {
        heap.push(Active(tree.node(r).height, r));
    }
    ActiveDescent {
        tree,
        heap,
        current: None,
        stopped: false,
    }
}

impl ActiveDescent<'_> {
    /// Marks the most recently yielded node with a STOP sign.
    pub fn stop(&mut self) {
        self.stopped = true;
    }
}

impl Iterator for ActiveDescent<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if let Some(c) = self.current.take() {
            if !self.stopped {
                let node = self.tree.node(c);
                for child in [node.left, node.right] {
                    if let ChildRef::Node(j) = child {
                        self.heap.push(Active(self.tree.node(j).height, j));
                    }
                }
            }
        }
        self.stopped = false;
        let Active(_, j) = self.heap.pop()?;
        self.current = Some(j);
        Some(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn heights(t: &DendroTree) -> Vec<f64> {
        t.nodes().iter().map(|n| n.height).collect()
    }

    #[test]
    fn three_points_complete() {
        let t = cluster_sorted(&[0.0, 1.0, 10.0], Linkage::Complete).unwrap();
        assert_eq!(heights(&t), vec![1.0, 10.0]);
        assert_eq!(t.leaves(ChildRef::Node(0)), &[0, 1]);
        assert_eq!(tree_height(&t).unwrap(), 10.0);
    }

    #[test]
    fn two_points_any_linkage() {
        for l in [Linkage::Complete, Linkage::Average, Linkage::Ward] {
            let t = cluster_sorted(&[0.0, 1.0], l).unwrap();
            assert_eq!(tree_height(&t).unwrap(), 1.0);
        }
    }

    #[test]
    fn single_leaf_has_no_height() {
        let t = cluster_sorted(&[4.0], Linkage::Complete).unwrap();
        assert!(tree_height(&t).is_err());
    }

    #[test]
    fn grid_complete_heights_are_diameters() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let t = cluster_sorted(&x, Linkage::Complete).unwrap();
        assert_eq!(tree_height(&t).unwrap(), 9.0);
        for (j, node) in t.nodes().iter().enumerate() {
            let s = t.span(ChildRef::Node(j));
            assert_eq!(node.height, x[s.end - 1] - x[s.start]);
        }
    }

    /// Brute-force reference: repeatedly merge the adjacent pair with the
    /// smallest union diameter, ties to the smaller union, then leftmost.
    fn naive_complete(x: &[f64]) -> Vec<(usize, usize, f64)> {
        let mut runs: Vec<(usize, usize)> = (0..x.len()).map(|i| (i, i)).collect();
        let mut out = vec![];
        while runs.len() > 1 {
            let mut best = 0;
            for j in 1..runs.len() - 1 {
                let d = x[runs[j + 1].1] - x[runs[j].0];
                let bd = x[runs[best + 1].1] - x[runs[best].0];
                let sz = runs[j + 1].1 - runs[j].0;
                let bsz = runs[best + 1].1 - runs[best].0;
                if d < bd || (d == bd && sz < bsz) {
                    best = j;
                }
            }
            let (s, e) = (runs[best].0, runs[best + 1].1);
            out.push((s, e, x[e] - x[s]));
            runs.splice(best..best + 2, [(s, e)]);
        }
        out
    }

    #[test]
    fn matches_naive_reference_on_integers() {
        let x = [0.0, 1.0, 1.0, 3.0, 4.0, 4.0, 4.0, 8.0, 9.0, 15.0, 16.0, 18.0];
        let t = cluster_sorted(&x, Linkage::Complete).unwrap();
        let got: Vec<(usize, usize, f64)> = (0..t.nodes().len())
            .map(|j| {
                let s = t.span(ChildRef::Node(j));
                (s.start, s.end - 1, t.node(j).height)
            })
            .collect();
        assert_eq!(got, naive_complete(&x));
    }

    #[test]
    fn ties_merge_first_at_zero() {
        let x = [1.0, 2.0, 2.0, 2.0, 3.0];
        let t = cluster_sorted(&x, Linkage::Complete).unwrap();
        assert_eq!(heights(&t)[..2], [0.0, 0.0]);
        assert_eq!(t.leaves(ChildRef::Node(1)), &[1, 2, 3]);
    }

    #[test]
    fn equal_distance_prefers_smaller_merge() {
        // {0,0,0} and {1} versus {1} and {2}: both at distance 1 after the ties,
        // but the two-point merge is smaller.
        let x = [0.0, 0.0, 0.0, 1.0, 2.0];
        let t = cluster_sorted(&x, Linkage::Complete).unwrap();
        let third = t.span(ChildRef::Node(2));
        assert_eq!(third, 3..5);
    }

    #[test]
    fn descent_order_and_stop() {
        let t = cluster_sorted(&[0.0, 1.0, 10.0], Linkage::Complete).unwrap();
        let all: Vec<usize> = descend_active(&t).collect();
        assert_eq!(all, vec![1, 0]);
        let mut d = descend_active(&t);
        assert_eq!(d.next(), Some(1));
        d.stop();
        assert_eq!(d.next(), None);
    }

    #[test]
    fn descent_of_chain_is_sorted() {
        let x = [0.0, 1.0, 3.0, 7.0, 15.0, 31.0];
        let t = cluster_sorted(&x, Linkage::Complete).unwrap();
        let got: Vec<f64> = descend_active(&t).map(|j| t.node(j).height).collect();
        let mut want = heights(&t);
        want.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(got.len(), 5);
        assert_eq!(got, want);
    }

    #[test]
    fn single_linkage_rejected() {
        assert!("single".parse::<Linkage>().is_err());
        assert_eq!("ward".parse::<Linkage>().unwrap(), Linkage::Ward);
    }

    proptest! {
        #[test]
        fn contiguity_and_monotone_heights(
            raw in prop::collection::vec(-50.0f64..50.0, 1..80),
            which in 0usize..3,
        ) {
            let mut x = raw.clone();
            x.sort_by(f64::total_cmp);
            let linkage = [Linkage::Complete, Linkage::Average, Linkage::Ward][which];
            let t = cluster_sorted(&x, linkage).unwrap();
            prop_assert_eq!(t.n_leaves(), x.len());
            prop_assert_eq!(t.leaf_order(), &(0..x.len()).collect::<Vec<_>>()[..]);
            for (j, node) in t.nodes().iter().enumerate() {
                let leaves = t.leaf_set(ChildRef::Node(j));
                prop_assert_eq!(leaves[leaves.len() - 1] - leaves[0] + 1, leaves.len());
                if let Some(p) = t.parent(ChildRef::Node(j)) {
                    prop_assert!(node.height <= t.node(p).height);
                }
                if linkage == Linkage::Complete {
                    prop_assert_eq!(node.height, x[leaves[leaves.len() - 1]] - x[leaves[0]]);
                }
            }
            let again = cluster_sorted(&x, linkage).unwrap();
            prop_assert_eq!(t, again);
        }
    }
}
