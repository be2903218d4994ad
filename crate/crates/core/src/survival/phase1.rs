use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimators::Lifetimes;
use crate::anoht_local::{compare_bins, entropy_ratio_weighted, global_test, GlobalTest, MIN_REPLICATES};
use crate::error::{domain, Result};
use crate::model::{GappedHistogram, SortedSample, TreatmentMatrix};
use crate::rng::stream_rng;

const TIE_SLACK: f64 = 1e-12;

/// How censored observations enter the per-bin compositions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `n_j` times each treatment's Kaplan-Meier drop over the bin.
    #[default]
    KaplanMeier,
    /// Plain counts of the uncensored observations.
    RawEvents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredBin {
    pub bin_index: usize,
    pub effective_counts: Vec<f64>,
    pub entropy_ratio: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredPhase1 {
    pub weighting: Weighting,
    pub treatment_names: Vec<String>,
    pub n_j: Vec<u64>,
    pub bins: Vec<CensoredBin>,
    pub global: GlobalTest,
}

/// Effective counts `n_j * (S_j(t_{k-1}) - S_j(t_k))` for every treatment
/// and bin, with `label[i]` the treatment of the `i`-th ordered lifetime.
fn km_effective(lt: &Lifetimes, label: &[usize], n_j: &[u64], edges: &[f64]) -> Vec<Vec<f64>> {
    let j = n_j.len();
    let k = edges.len() - 1;
    let mut at_risk: Vec<u64> = n_j.to_vec();
    let mut surv = vec![1.0; j];
    let mut prev = vec![1.0; j];
    let mut out = vec![vec![0.0; k]; j];
    let (times, events) = (lt.times(), lt.events());
    let mut i = 0;
    // Everything strictly before the first edge shapes S(t_0-).
    while i < times.len() && times[i] < edges[0] {
        step(&mut surv, &mut at_risk, label[i], events[i]);
        i += 1;
    }
    prev.copy_from_slice(&surv);
    for b in 0..k {
        while i < times.len() && times[i] <= edges[b + 1] {
            step(&mut surv, &mut at_risk, label[i], events[i]);
            i += 1;
        }
        for t in 0..j {
            out[t][b] = n_j[t] as f64 * (prev[t] - surv[t]);
        }
        prev.copy_from_slice(&surv);
    }
    out
}

fn step(surv: &mut [f64], at_risk: &mut [u64], l: usize, event: bool) {
    if event {
        surv[l] *= 1.0 - 1.0 / at_risk[l] as f64;
    }
    at_risk[l] -= 1;
}

fn statistics(effective: &[Vec<f64>], n_j: &[f64]) -> Result<(Vec<f64>, f64)> {
    let k = effective[0].len();
    let mut ratios = Vec::with_capacity(k);
    let mut sizes = Vec::with_capacity(k);
    for b in 0..k {
        let col: Vec<f64> = effective.iter().map(|r| r[b].max(0.0)).collect();
        sizes.push(col.iter().sum::<f64>());
        ratios.push(if sizes[b] > 0.0 { entropy_ratio_weighted(&col, n_j)? } else { 1.0 });
    }
    let total: f64 = sizes.iter().sum();
    let weighted = ratios.iter().zip(&sizes).map(|(r, s)| s / total * r).sum();
    Ok((ratios, weighted))
}

/// Phase-1 comparison of treatments on a histogram of censored data, with
/// p-values from permuting treatment labels over all observations.
pub fn censored_phase1(
    sample: &SortedSample,
    hist: &GappedHistogram,
    replicates: usize,
    seed: u64,
    weighting: Weighting,
) -> Result<CensoredPhase1> {
    let names = sample
        .treatments()
        .ok_or_else(|| domain("phase-1 comparison needs treatment labels"))?;
    let edges = hist.edges();
    match weighting {
        Weighting::RawEvents => raw_events(sample, &names, hist, &edges, replicates, seed),
        Weighting::KaplanMeier => {
            if replicates < MIN_REPLICATES {
                return Err(domain(format!("at least {MIN_REPLICATES} permutation replicates are required")));
            }
            let lt = Lifetimes::from_sample(sample)?;
            let labels = sample.labels().expect("treatments exist");
            let label: Vec<usize> = lt
                .source()
                .iter()
                .map(|&s| names.binary_search(&labels[sample.perm()[s]]).expect("label is a treatment"))
                .collect();
            let mut n_j = vec![0u64; names.len()];
            label.iter().for_each(|&l| n_j[l] += 1);
            let sizes: Vec<f64> = n_j.iter().map(|&n| n as f64).collect();
            let observed = km_effective(&lt, &label, &n_j, &edges);
            let (ratios, weighted) = statistics(&observed, &sizes)?;
            let sims = (0..replicates as u64)
                .into_par_iter()
                .map(|r| {
                    let mut l = label.clone();
                    l.shuffle(&mut stream_rng(seed, r));
                    statistics(&km_effective(&lt, &l, &n_j, &edges), &sizes)
                })
                .collect::<Result<Vec<_>>>()?;
            let p = |obs: f64, it: &mut dyn Iterator<Item = f64>| {
                (1 + it.filter(|&s| s <= obs + TIE_SLACK).count()) as f64 / (replicates + 1) as f64
            };
            let bins = ratios
                .iter()
                .enumerate()
                .map(|(b, &r)| CensoredBin {
                    bin_index: b,
                    effective_counts: observed.iter().map(|row| row[b]).collect(),
                    entropy_ratio: r,
                    p_value: p(r, &mut sims.iter().map(|s| s.0[b])),
                })
                .collect();
            let global = GlobalTest {
                weighted_entropy: weighted,
                p_value: p(weighted, &mut sims.iter().map(|s| s.1)),
                replicates,
            };
            Ok(CensoredPhase1 {
                weighting,
                treatment_names: names,
                n_j,
                bins,
                global,
            })
        }
    }
}

fn raw_events(
    sample: &SortedSample,
    names: &[String],
    hist: &GappedHistogram,
    edges: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<CensoredPhase1> {
    let lt = Lifetimes::from_sample(sample)?;
    let labels = sample.labels().expect("treatments exist");
    let status = sample.status().expect("checked by Lifetimes");
    let mut counts = vec![vec![0u64; hist.n_bins()]; names.len()];
    for (s, &orig) in sample.perm().iter().enumerate() {
        if status[orig] != 1 {
            continue;
        }
        let j = names.binary_search(&labels[orig]).expect("label is a treatment");
        if let Some(k) = super::estimators::bin_index(edges, sample.values()[s]) {
            counts[j][k] += 1;
        }
    }
    let kept: Vec<usize> = (0..names.len()).filter(|&j| counts[j].iter().any(|&c| c > 0)).collect();
    if kept.len() < names.len() {
        log::warn!("{} treatments without events are left out", names.len() - kept.len());
    }
    let t = TreatmentMatrix::new(
        kept.iter().map(|&j| names[j].clone()).collect(),
        kept.iter().map(|&j| counts[j].clone()).collect(),
        edges.to_vec(),
    )?;
    debug_assert!(t.n() as usize <= lt.n_events());
    let bins = compare_bins(&t, replicates, seed)?
        .into_iter()
        .map(|c| CensoredBin {
            bin_index: c.bin_index,
            effective_counts: c.counts.iter().map(|&v| v as f64).collect(),
            entropy_ratio: c.entropy_ratio,
            p_value: c.p_value,
        })
        .collect();
    Ok(CensoredPhase1 {
        weighting: Weighting::RawEvents,
        treatment_names: t.treatment_names().to_vec(),
        n_j: t.n_j().to_vec(),
        bins,
        global: global_test(&t, replicates, seed)?,
    })
}
