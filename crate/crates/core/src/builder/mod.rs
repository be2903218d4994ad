//! Gapped histograms grown top-down from a contiguity-constrained dendrogram.

mod gaps;
mod oracle;

use std::collections::HashMap;
use std::ops::Range;

use log::debug;
use serde::{Deserialize, Serialize};

pub use gaps::{check_gap_boundaries, check_gap_midpoint, extended_ends, Extension};
pub use oracle::{brute_force_optimum, BRUTE_FORCE_CAP};

use crate::error::{domain, Result};
use crate::hc1d::{cluster, descend_active, Linkage};
use crate::model::{Bin, ChildRef, DendroTree, EdgeMark, GapDecision, GapMethod, GappedHistogram, SortedSample};
use crate::uniformity::{dess_own_range, UniformityTest};

/// Threshold below which a node's decoding error stops the descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum L0Spec {
    Absolute(f64),
    /// Multiple of the tree height.
    FractionOfTreeHeight(f64),
}

impl Default for L0Spec {
    fn default() -> Self {
        L0Spec::FractionOfTreeHeight(0.1)
    }
}

impl L0Spec {
    pub fn resolve(self, tree_height: f64) -> Result<f64> {
        let v = match self {
            L0Spec::Absolute(v) => v,
            L0Spec::FractionOfTreeHeight(f) => f * tree_height,
        };
        if !(v.is_finite() && v >= 0.0) {
            return Err(domain(format!("threshold {v} must be finite and non-negative")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BuildOptions {
    pub l0: L0Spec,
    pub linkage: Linkage,
    pub gap_method: GapMethod,
    pub extension: Extension,
}

/// Total decoding error plus a charge of `l0` per boundary and per gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    pub total_dess: f64,
    /// `(K - 1) + number of gaps`.
    pub n_boundaries: usize,
    pub l0: f64,
    pub value: f64,
}

pub fn hamiltonian(hist: &GappedHistogram, l0: f64) -> Hamiltonian {
    let total_dess = hist.total_dess();
    let n_boundaries = hist.n_bins() - 1 + hist.n_gaps();
    Hamiltonian {
        total_dess,
        n_boundaries,
        l0,
        value: total_dess + l0 * n_boundaries as f64,
    }
}

/// Clusters the sample and grows a histogram from the resulting tree.
pub fn build_histogram(
    sample: &SortedSample,
    opts: &BuildOptions,
    test: &UniformityTest,
) -> Result<(GappedHistogram, DendroTree)> {
    let tree = cluster(sample, opts.linkage);
    let hist = build_with_tree(sample.values(), &tree, opts, test)?;
    Ok((hist, tree))
}

/// Runs the top-down descent on an existing tree whose leaves are the
/// sorted positions of `values`.
pub fn build_with_tree(
    values: &[f64],
    tree: &DendroTree,
    opts: &BuildOptions,
    test: &UniformityTest,
) -> Result<GappedHistogram> {
    check_tree(values, tree)?;
    if values.len() == 1 {
        return assemble(values, std::iter::once(0..1).collect(), 0.0, opts, test);
    }
    let l0 = opts.l0.resolve(tree.height()?)?;
    let root = tree.span(tree.root());
    if test.accepts_own_range(&values[root.clone()])? {
        return assemble(values, vec![root], l0, opts, test);
    }
    let mut stopped = Vec::new();
    let mut walk = descend_active(tree);
    let mut first = true;
    while let Some(j) = walk.next() {
        let span = tree.span(ChildRef::Node(j));
        let bin = &values[span.clone()];
        // The whole range was tested above; only the criterion applied there.
        let stop = !first && (dess_own_range(bin)? < l0 || test.accepts_own_range(bin)?);
        first = false;
        if stop {
            walk.stop();
            stopped.push(span);
        }
    }
    let mut covered = vec![false; values.len()];
    for s in &stopped {
        covered[s.clone()].iter_mut().for_each(|c| *c = true);
    }
    let mut ranges = stopped;
    ranges.extend((0..values.len()).filter(|&i| !covered[i]).map(|i| i..i + 1));
    ranges.sort_by_key(|r| r.start);
    assemble(values, ranges, l0, opts, test)
}

fn check_tree(values: &[f64], tree: &DendroTree) -> Result<()> {
    if values.is_empty() {
        return Err(domain("cannot build a histogram of nothing"));
    }
    if tree.n_leaves() != values.len() {
        return Err(domain(format!(
            "tree has {} leaves for {} observations",
            tree.n_leaves(),
            values.len()
        )));
    }
    if tree.leaf_order().iter().enumerate().any(|(p, &l)| p != l) {
        return Err(domain("tree leaves are not in sorted order"));
    }
    Ok(())
}

fn adjudicate(left: &[f64], right: &[f64], opts: &BuildOptions, test: &UniformityTest) -> Result<GapDecision> {
    let by_ext = check_gap_boundaries(left, right, opts.extension)?;
    let by_mid = check_gap_midpoint(left, right, test, opts.extension)?;
    if by_ext.is_gap != by_mid.is_gap {
        debug!(
            "gap methods disagree between [{}, {}] and [{}, {}]: extension {}, midpoint {}",
            left[0],
            left[left.len() - 1],
            right[0],
            right[right.len() - 1],
            by_ext.is_gap,
            by_mid.is_gap
        );
    }
    Ok(match opts.gap_method {
        GapMethod::BoundaryExtension => by_ext,
        GapMethod::MidpointDess => by_mid,
    })
}

/// Turns a partition of the sorted sample into bins with edges and gap decisions.
pub(crate) fn assemble(
    values: &[f64],
    ranges: Vec<Range<usize>>,
    l0: f64,
    opts: &BuildOptions,
    test: &UniformityTest,
) -> Result<GappedHistogram> {
    let decisions: Vec<GapDecision> = ranges
        .windows(2)
        .map(|w| adjudicate(&values[w[0].clone()], &values[w[1].clone()], opts, test))
        .collect::<Result<_>>()?;
    assemble_with(values, ranges, decisions, l0, opts, test)
}

pub(crate) fn assemble_with(
    values: &[f64],
    ranges: Vec<Range<usize>>,
    gaps: Vec<GapDecision>,
    l0: f64,
    opts: &BuildOptions,
    test: &UniformityTest,
) -> Result<GappedHistogram> {
    let k = ranges.len();
    let mut bins = Vec::with_capacity(k);
    for (j, r) in ranges.into_iter().enumerate() {
        let v = &values[r.clone()];
        let (ahat, bhat, _) = extended_ends(v, opts.extension)?;
        let (lo, hi) = (v[0], v[v.len() - 1]);
        let (a, left_gap) = if j == 0 {
            (ahat, EdgeMark::BoundaryOfSupport)
        } else {
            let g = &gaps[j - 1];
            let prev_hi = values[r.start - 1];
            if g.is_gap {
                let a = if g.left_bhat < g.right_ahat { g.right_ahat } else { lo };
                (a, EdgeMark::Gap)
            } else {
                (0.5 * (prev_hi + lo), EdgeMark::None)
            }
        };
        let (b, right_gap) = if j + 1 == k {
            (bhat, EdgeMark::BoundaryOfSupport)
        } else {
            let g = &gaps[j];
            let next_lo = values[r.end];
            if g.is_gap {
                let b = if g.left_bhat < g.right_ahat { g.left_bhat } else { hi };
                (b, EdgeMark::Gap)
            } else {
                (0.5 * (hi + next_lo), EdgeMark::None)
            }
        };
        bins.push(Bin {
            a,
            b,
            members: r,
            dess: dess_own_range(v)?,
            left_gap,
            right_gap,
        });
    }
    let hist = GappedHistogram {
        bins,
        gaps,
        l0,
        criterion: test.info(),
        linkage: opts.linkage,
    };
    hist.validate()?;
    Ok(hist)
}

/// Splits any bin whose children in `tree` lower the total decoding error
/// by more than `l0`, recursively.
pub fn refine(
    values: &[f64],
    hist: &GappedHistogram,
    tree: &DendroTree,
    l0: f64,
    opts: &BuildOptions,
    test: &UniformityTest,
) -> Result<GappedHistogram> {
    check_tree(values, tree)?;
    if hist.n() != values.len() {
        return Err(domain("histogram does not cover the sample"));
    }
    let by_span: HashMap<(usize, usize), ChildRef> = tree
        .nodes()
        .iter()
        .enumerate()
        .map(|(j, _)| {
            let s = tree.span(ChildRef::Node(j));
            ((s.start, s.end), ChildRef::Node(j))
        })
        .collect();
    let mut out = Vec::new();
    let mut todo: Vec<Range<usize>> = hist.bins.iter().rev().map(|b| b.members.clone()).collect();
    while let Some(r) = todo.pop() {
        if r.len() == 1 {
            out.push(r);
            continue;
        }
        let Some(&ChildRef::Node(j)) = by_span.get(&(r.start, r.end)) else {
            return Err(domain(format!("bin {}..{} is not a subtree of the tree", r.start, r.end)));
        };
        let node = tree.node(j);
        let (lr, rr) = (tree.span(node.left), tree.span(node.right));
        let whole = dess_own_range(&values[r.clone()])?;
        let parts = dess_own_range(&values[lr.clone()])? + dess_own_range(&values[rr.clone()])?;
        if whole - parts > l0 {
            todo.push(rr);
            todo.push(lr);
        } else {
            out.push(r);
        }
    }
    assemble(values, out, l0, opts, test)
}
