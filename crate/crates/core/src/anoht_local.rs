//! Per-bin treatment compositions, entropy indices and label-permutation p-values.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{GappedHistogram, SortedSample, TreatmentMatrix};
use crate::rng::stream_rng;

/// Slack allowed when a simulated statistic is compared with the observed one.
const TIE_SLACK: f64 = 1e-12;

/// Smallest number of permutation replicates accepted.
pub const MIN_REPLICATES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinComparison {
    pub bin_index: usize,
    pub counts: Vec<u64>,
    pub entropy_ratio: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalTest {
    pub weighted_entropy: f64,
    pub p_value: f64,
    pub replicates: usize,
}

/// Counts each treatment in each bin. Treatments are ordered by name.
pub fn bin_compositions(hist: &GappedHistogram, sample: &SortedSample) -> Result<TreatmentMatrix> {
    let names = sample
        .treatments()
        .ok_or_else(|| domain("bin compositions need treatment labels"))?;
    if hist.n() != sample.len() {
        return Err(domain(format!(
            "histogram covers {} observations, sample has {}",
            hist.n(),
            sample.len()
        )));
    }
    let mut counts = vec![vec![0u64; hist.n_bins()]; names.len()];
    for (k, bin) in hist.bins.iter().enumerate() {
        for i in bin.members.clone() {
            let label = sample
                .label_sorted(i)
                .ok_or_else(|| domain(format!("observation {i} has no label")))?;
            let j = names
                .binary_search_by(|n| n.as_str().cmp(label))
                .map_err(|_| domain(format!("unknown treatment {label}")))?;
            counts[j][k] += 1;
        }
    }
    TreatmentMatrix::new(names, counts, hist.edges())
}

fn shannon(weights: impl Iterator<Item = f64> + Clone) -> f64 {
    let total: f64 = weights.clone().sum();
    -weights
        .filter(|&w| w > 0.0)
        .map(|w| {
            let p = w / total;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Entropy of a bin's composition relative to the entropy of the treatment
/// sizes, both in nats. A zero reference entropy gives 1.
pub fn entropy_ratio(column: &[u64], n_j: &[u64]) -> Result<f64> {
    let col: Vec<f64> = column.iter().map(|&c| c as f64).collect();
    let sizes: Vec<f64> = n_j.iter().map(|&c| c as f64).collect();
    entropy_ratio_weighted(&col, &sizes)
}

/// [`entropy_ratio`] for non-negative real masses.
pub fn entropy_ratio_weighted(column: &[f64], n_j: &[f64]) -> Result<f64> {
    if column.len() != n_j.len() {
        return Err(domain("column and treatment sizes differ in length"));
    }
    if column.iter().chain(n_j).any(|&w| !(w >= 0.0 && w.is_finite())) {
        return Err(domain("masses must be finite and non-negative"));
    }
    if !column.iter().any(|&w| w > 0.0) {
        return Err(domain("entropy of an empty bin"));
    }
    let reference = shannon(n_j.iter().copied());
    if reference <= 0.0 {
        return Ok(1.0);
    }
    Ok(shannon(column.iter().copied()) / reference)
}

fn weighted(ratios: &[f64], sizes: &[u64], n: u64) -> f64 {
    ratios.iter().zip(sizes).map(|(r, &s)| s as f64 / n as f64 * r).sum()
}

/// Observed statistics of a matrix: per-bin ratios and the weighted entropy.
fn statistics(t: &TreatmentMatrix) -> Result<(Vec<f64>, f64)> {
    let ratios = (0..t.k())
        .map(|k| entropy_ratio(&t.column(k), t.n_j()))
        .collect::<Result<Vec<_>>>()?;
    let w = weighted(&ratios, &t.column_sums(), t.n());
    Ok((ratios, w))
}

/// Null replicates of the per-bin ratios: the pooled labels are dealt
/// without replacement into bins of the observed sizes. Replicate `r` uses
/// stream `r` of `seed`.
fn permuted_ratios(t: &TreatmentMatrix, replicates: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if replicates < MIN_REPLICATES {
        return Err(domain(format!("at least {MIN_REPLICATES} permutation replicates are required")));
    }
    let pool: Vec<usize> = t
        .n_j()
        .iter()
        .enumerate()
        .flat_map(|(j, &n)| std::iter::repeat_n(j, n as usize))
        .collect();
    let sizes = t.column_sums();
    let (j, n_j) = (t.j(), t.n_j());
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut labels = pool.clone();
            labels.shuffle(&mut stream_rng(seed, r));
            let mut start = 0;
            sizes
                .iter()
                .map(|&s| {
                    let mut col = vec![0u64; j];
                    for &l in &labels[start..start + s as usize] {
                        col[l] += 1;
                    }
                    start += s as usize;
                    entropy_ratio(&col, n_j)
                })
                .collect()
        })
        .collect()
}

fn p_value(observed: f64, simulated: impl Iterator<Item = f64>, replicates: usize) -> f64 {
    let extreme = simulated.filter(|&s| s <= observed + TIE_SLACK).count();
    (1 + extreme) as f64 / (replicates + 1) as f64
}

/// Permutation p-value of bin `k`: low entropy means the bin separates treatments.
pub fn bin_pvalue(t: &TreatmentMatrix, k: usize, replicates: usize, seed: u64) -> Result<f64> {
    if k >= t.k() {
        return Err(domain(format!("bin {k} out of range")));
    }
    let observed = entropy_ratio(&t.column(k), t.n_j())?;
    let sims = permuted_ratios(t, replicates, seed)?;
    Ok(p_value(observed, sims.iter().map(|s| s[k]), replicates))
}

/// Ratio and p-value for every bin, all from one set of permutations.
pub fn compare_bins(t: &TreatmentMatrix, replicates: usize, seed: u64) -> Result<Vec<BinComparison>> {
    let (ratios, _) = statistics(t)?;
    let sims = permuted_ratios(t, replicates, seed)?;
    Ok(ratios
        .iter()
        .enumerate()
        .map(|(k, &r)| BinComparison {
            bin_index: k,
            counts: t.column(k),
            entropy_ratio: r,
            p_value: p_value(r, sims.iter().map(|s| s[k]), replicates),
        })
        .collect())
}

/// Occupancy-weighted entropy ratio over all bins and its permutation p-value.
pub fn global_test(t: &TreatmentMatrix, replicates: usize, seed: u64) -> Result<GlobalTest> {
    let (_, observed) = statistics(t)?;
    let sizes = t.column_sums();
    let sims = permuted_ratios(t, replicates, seed)?;
    let null = sims.iter().map(|s| weighted(s, &sizes, t.n()));
    Ok(GlobalTest {
        weighted_entropy: observed,
        p_value: p_value(observed, null, replicates),
        replicates,
    })
}
