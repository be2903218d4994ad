use std::cmp::Ordering;

use rayon::prelude::*;

use super::gaps::{check_gap_boundaries, check_gap_midpoint};
use super::{assemble_with, hamiltonian, BuildOptions, Hamiltonian};
use crate::error::{domain, Error, Result};
use crate::model::{GapDecision, GapMethod, GappedHistogram};
use crate::uniformity::{dess_own_range, UniformityTest};

/// Largest sample the exhaustive search accepts.
pub const BRUTE_FORCE_CAP: usize = 14;

struct Candidate {
    value: f64,
    n_bins: usize,
    cuts: Vec<usize>,
}

impl Candidate {
    fn better(self, other: Self) -> Self {
        let ord = self
            .value
            .total_cmp(&other.value)
            .then(self.n_bins.cmp(&other.n_bins))
            .then_with(|| self.cuts.cmp(&other.cuts));
        if ord == Ordering::Greater {
            other
        } else {
            self
        }
    }
}

/// Minimises the Hamiltonian over every partition of the sorted sample into
/// contiguous runs whose decoding error is below `l0` or which pass `test`.
///
/// Gap flags are not free: each junction takes the decision of the
/// configured gap method. Ties go to fewer bins, then to the boundaries
/// that sit further left.
pub fn brute_force_optimum(
    values: &[f64],
    l0: f64,
    opts: &BuildOptions,
    test: &UniformityTest,
) -> Result<(GappedHistogram, Hamiltonian)> {
    let n = values.len();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge { n, cap: BRUTE_FORCE_CAP });
    }
    if n == 0 {
        return Err(domain("exhaustive search over an empty sample"));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(domain("exhaustive search needs sorted values"));
    }
    // Half-open run [s, e) is stored at s * (n + 1) + e.
    let idx = |s: usize, e: usize| s * (n + 1) + e;
    let mut run_dess = vec![0.0; (n + 1) * (n + 1)];
    let mut feasible = vec![false; (n + 1) * (n + 1)];
    for s in 0..n {
        for e in s + 1..=n {
            let d = dess_own_range(&values[s..e])?;
            run_dess[idx(s, e)] = d;
            feasible[idx(s, e)] = d < l0 || test.accepts_own_range(&values[s..e])?;
        }
    }
    let decide = |s: usize, m: usize, e: usize| -> Result<GapDecision> {
        match opts.gap_method {
            GapMethod::BoundaryExtension => check_gap_boundaries(&values[s..m], &values[m..e], opts.extension),
            GapMethod::MidpointDess => check_gap_midpoint(&values[s..m], &values[m..e], test, opts.extension),
        }
    };
    let at3 = |s: usize, m: usize, e: usize| (s * (n + 1) + m) * (n + 1) + e;
    let mut gap = vec![false; (n + 1) * (n + 1) * (n + 1)];
    for s in 0..n {
        for m in s + 1..n {
            for e in m + 1..=n {
                gap[at3(s, m, e)] = decide(s, m, e)?.is_gap;
            }
        }
    }

    let best = (0u32..1 << (n - 1))
        .into_par_iter()
        .filter_map(|mask| {
            let mut bounds = vec![0];
            bounds.extend((1..n).filter(|&i| mask & (1 << (i - 1)) != 0));
            bounds.push(n);
            let mut total = 0.0;
            for w in bounds.windows(2) {
                if !feasible[idx(w[0], w[1])] {
                    return None;
                }
                total += run_dess[idx(w[0], w[1])];
            }
            let n_gaps = bounds.windows(3).filter(|w| gap[at3(w[0], w[1], w[2])]).count();
            let n_bins = bounds.len() - 1;
            Some(Candidate {
                value: total + l0 * ((n_bins - 1 + n_gaps) as f64),
                n_bins,
                cuts: bounds,
            })
        })
        .reduce_with(Candidate::better)
        .ok_or_else(|| domain("no admissible partition"))?;

    let ranges: Vec<_> = best.cuts.windows(2).map(|w| w[0]..w[1]).collect();
    let decisions = best
        .cuts
        .windows(3)
        .map(|w| decide(w[0], w[1], w[2]))
        .collect::<Result<Vec<_>>>()?;
    let hist = assemble_with(values, ranges, decisions, l0, opts, test)?;
    let h = hamiltonian(&hist, l0);
    Ok((hist, h))
}
