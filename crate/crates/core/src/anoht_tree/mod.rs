//! Treatment trees on bin frequencies and the authenticity of their branches.

mod covariance;
mod mimic;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use covariance::{cumulation_matrix, differencing_matrix, sigma_bridge, sigma_star, CovarianceK, CovarianceKind};
pub use mimic::{mimic_row, RowMimic};

use crate::error::{domain, Result};
use crate::model::{ChildRef, DendroTree, TreatmentMatrix};
use crate::rng::stream_rng;

/// Smallest number of mimic replicates accepted.
pub const MIN_MIMICS: usize = 100;

/// Rows of `T` divided by the treatment sizes.
pub fn row_normalize(t: &TreatmentMatrix) -> Result<Vec<Vec<f64>>> {
    t.counts()
        .iter()
        .zip(t.treatment_names())
        .map(|(row, name)| {
            let n: u64 = row.iter().sum();
            if n == 0 {
                return Err(domain(format!("treatment {name} has no observations")));
            }
            Ok(row.iter().map(|&c| c as f64 / n as f64).collect())
        })
        .collect()
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Complete-linkage agglomerative tree over the rows under Euclidean distance.
/// Equal distances merge the pair holding the lowest row indices first.
pub fn treatment_tree(rows: &[Vec<f64>]) -> Result<DendroTree> {
    let j = rows.len();
    if j < 2 {
        return Err(domain("a treatment tree needs at least two rows"));
    }
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(domain("rows differ in length"));
    }
    let dist: Vec<Vec<f64>> = rows.iter().map(|a| rows.iter().map(|b| euclidean(a, b)).collect()).collect();
    // Active clusters: (lowest member, members, handle).
    let mut active: Vec<(usize, Vec<usize>, ChildRef)> = (0..j).map(|i| (i, vec![i], ChildRef::Leaf(i))).collect();
    let mut merges = Vec::with_capacity(j - 1);
    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..active.len() {
            for b in a + 1..active.len() {
                let d = active[a]
                    .1
                    .iter()
                    .flat_map(|&x| active[b].1.iter().map(move |&y| (x, y)))
                    .map(|(x, y)| dist[x][y])
                    .fold(0.0, f64::max);
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        let (d, a, b) = best.expect("two active clusters");
        let (lo_b, members_b, ref_b) = active.remove(b);
        let (lo_a, mut members_a, ref_a) = active.remove(a);
        members_a.extend(members_b);
        merges.push((ref_a, ref_b, d));
        let node = ChildRef::Node(merges.len() - 1);
        let lo = lo_a.min(lo_b);
        let at = active.partition_point(|c| c.0 < lo);
        active.insert(at, (lo, members_a, node));
    }
    // Complete linkage is monotone, but guard against rounding.
    let mut heights: Vec<f64> = Vec::with_capacity(merges.len());
    for m in merges.iter_mut() {
        let (l, r, h) = *m;
        let child = |c: ChildRef| match c {
            ChildRef::Node(m) => heights[m],
            ChildRef::Leaf(_) => 0.0,
        };
        let h = h.max(child(l)).max(child(r));
        heights.push(h);
        m.2 = h;
    }
    DendroTree::from_merges(j, merges)
}

/// Rank of every internal node's height, 1 for the lowest. Equal heights
/// rank in merge order, so a node always outranks its descendants.
pub fn rank_digits(tree: &DendroTree) -> Vec<usize> {
    let mut order: Vec<usize> = (0..tree.nodes().len()).collect();
    order.sort_by(|&a, &b| tree.node(a).height.total_cmp(&tree.node(b).height).then(a.cmp(&b)));
    let mut rank = vec![0; order.len()];
    for (r, &node) in order.iter().enumerate() {
        rank[node] = r + 1;
    }
    rank
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAuthenticity {
    pub node: usize,
    pub leaf_set: Vec<usize>,
    pub leaf_names: Vec<String>,
    pub height: f64,
    pub rank_digit: usize,
    pub index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthenticityReport {
    pub treatment_names: Vec<String>,
    pub nodes: Vec<NodeAuthenticity>,
    pub replicates: usize,
    pub tree: DendroTree,
}

impl AuthenticityReport {
    /// The entry whose leaf set is exactly `names`, in any order.
    pub fn node_for(&self, names: &[&str]) -> Option<&NodeAuthenticity> {
        let mut want: Vec<&str> = names.to_vec();
        want.sort_unstable();
        self.nodes.iter().find(|n| {
            let mut have: Vec<&str> = n.leaf_names.iter().map(String::as_str).collect();
            have.sort_unstable();
            have == want
        })
    }
}

/// Authenticity of every branch of the tree on `rows`: the share of mimic
/// trees in which the smallest branch holding the same leaves ranks no
/// higher than the reference branch. Replicate `r` uses stream `r` of `seed`
/// and mimics the rows in order.
pub fn authenticity_of_rows(
    names: &[String],
    rows: &[Vec<f64>],
    mimics: &[RowMimic],
    replicates: usize,
    seed: u64,
) -> Result<AuthenticityReport> {
    if replicates < MIN_MIMICS {
        return Err(domain(format!("at least {MIN_MIMICS} mimic replicates are required")));
    }
    if names.len() != rows.len() || mimics.len() != rows.len() {
        return Err(domain("one name and one mimic per row are required"));
    }
    let tree = treatment_tree(rows)?;
    let ranks = rank_digits(&tree);
    let leaf_sets: Vec<Vec<usize>> = (0..tree.nodes().len()).map(|m| tree.leaf_set(ChildRef::Node(m))).collect();
    let hits = (0..replicates as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<u32>> {
            let mut rng = stream_rng(seed, r);
            let sim: Vec<Vec<f64>> = mimics.iter().map(|m| m.draw(&mut rng)).collect();
            let t = treatment_tree(&sim)?;
            let sim_ranks = rank_digits(&t);
            leaf_sets
                .iter()
                .zip(&ranks)
                .map(|(set, &rank)| {
                    Ok(match t.smallest_containing(set)? {
                        ChildRef::Node(m) => u32::from(sim_ranks[m] <= rank),
                        ChildRef::Leaf(_) => 1,
                    })
                })
                .collect()
        })
        .try_reduce(
            || vec![0; leaf_sets.len()],
            |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()),
        )?;
    let nodes = leaf_sets
        .into_iter()
        .enumerate()
        .map(|(m, set)| NodeAuthenticity {
            node: m,
            leaf_names: set.iter().map(|&l| names[l].clone()).collect(),
            leaf_set: set,
            height: tree.node(m).height,
            rank_digit: ranks[m],
            index: hits[m] as f64 / replicates as f64,
        })
        .collect();
    Ok(AuthenticityReport {
        treatment_names: names.to_vec(),
        nodes,
        replicates,
        tree,
    })
}

/// Authenticity of the treatment tree built from bin frequencies, each row
/// mimicked as a Gaussian with its own increment covariance over `n_j`.
pub fn authenticity(t: &TreatmentMatrix, replicates: usize, seed: u64) -> Result<AuthenticityReport> {
    let rows = row_normalize(t)?;
    let mimics = rows
        .iter()
        .zip(t.n_j())
        .map(|(row, &n)| RowMimic::new(row, &sigma_star(row)?, n as f64))
        .collect::<Result<Vec<_>>>()?;
    authenticity_of_rows(t.treatment_names(), &rows, &mimics, replicates, seed)
}
