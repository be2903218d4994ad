//! Right-censored data: product-limit and cumulative-hazard estimators,
//! their binned covariances, and histograms and treatment trees built on them.

mod estimators;
mod phase1;

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use estimators::{kaplan_meier, nelson_aalen, variance_integral, Lifetimes, StepEstimate, StepKind};
pub use phase1::{censored_phase1, CensoredPhase1, Weighting};

use crate::anoht_tree::{
    authenticity_of_rows, differencing_matrix, AuthenticityReport, CovarianceK, CovarianceKind, RowMimic,
};
use crate::builder::{build_histogram, BuildOptions};
use crate::error::{domain, Result};
use crate::model::{sort_sample, DendroTree, GappedHistogram, SortedSample};
use crate::uniformity::UniformityTest;

/// Histogram of the uncensored times with product-limit masses per bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredHistogram {
    pub histogram: GappedHistogram,
    /// `S(a_k-) - S(b_k)` for every bin.
    pub masses: Vec<f64>,
    /// Survival estimate at each bin's right edge.
    pub survival_at_edges: Vec<f64>,
    pub n: usize,
    pub n_events: usize,
}

/// Per-bin drops of a survival curve on a histogram grid (`K + 1` edges).
/// The first bin starts just before its left edge; later bins start where
/// the previous one ended, so the drops sum to `S(t_0-) - S(t_K)`.
pub fn survival_drops(km: &StepEstimate, edges: &[f64]) -> Vec<f64> {
    let mut prev = km.eval_left(edges[0]);
    edges[1..]
        .iter()
        .map(|&e| {
            let s = km.eval(e);
            let d = prev - s;
            prev = s;
            d
        })
        .collect()
}

/// Per-bin increments of a cumulative hazard on a histogram grid.
pub fn hazard_increments(na: &StepEstimate, edges: &[f64]) -> Vec<f64> {
    let mut prev = na.eval_left(edges[0]);
    edges[1..]
        .iter()
        .map(|&e| {
            let h = na.eval(e);
            let d = h - prev;
            prev = h;
            d
        })
        .collect()
}

/// Grows a histogram on the uncensored times, then weights each bin by
/// the product-limit estimate computed on the whole sample.
pub fn censored_histogram(
    sample: &SortedSample,
    opts: &BuildOptions,
    test: &UniformityTest,
) -> Result<(CensoredHistogram, DendroTree, SortedSample)> {
    let lifetimes = Lifetimes::from_sample(sample)?;
    let events = lifetimes.event_times();
    if events.len() < 2 {
        return Err(domain(format!("{} uncensored observations; at least 2 are needed", events.len())));
    }
    let status = sample.status().expect("checked by Lifetimes");
    let uncensored = sample.filter(|i| status[i] == 1)?;
    debug_assert_eq!(uncensored.len(), events.len());
    let (histogram, tree) = build_histogram(&uncensored, opts, test)?;
    let km = lifetimes.kaplan_meier();
    let edges = histogram.edges();
    let masses = survival_drops(&km, &edges);
    let survival_at_edges = edges[1..].iter().map(|&e| km.eval(e)).collect();
    Ok((
        CensoredHistogram {
            histogram,
            masses,
            survival_at_edges,
            n: lifetimes.len(),
            n_events: events.len(),
        },
        tree,
        uncensored,
    ))
}

/// `S(t_i) S(t_j)` times the integrals accumulated up to bin `min(i, j)`.
pub fn sigma_km(survival: &[f64], integrals: &[f64]) -> Result<CovarianceK> {
    if survival.len() != integrals.len() || survival.is_empty() {
        return Err(domain("one survival value and one integral per bin are required"));
    }
    if survival.iter().any(|s| !(0.0..=1.0).contains(s)) || survival.windows(2).any(|w| w[0] < w[1]) {
        return Err(domain("survival values must be non-increasing in [0, 1]"));
    }
    if integrals.iter().any(|v| !(*v >= 0.0)) {
        return Err(domain("integrals must be non-negative"));
    }
    let cumulative: Vec<f64> = integrals
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    Ok(CovarianceK::from_fn(CovarianceKind::KaplanMeier, survival.len(), |i, j| {
        survival[i] * survival[j] * cumulative[i.min(j)]
    }))
}

/// Diagonal matrix of the per-bin integrals.
pub fn sigma_na(integrals: &[f64]) -> Result<CovarianceK> {
    if integrals.is_empty() || integrals.iter().any(|v| !(*v >= 0.0)) {
        return Err(domain("integrals must be non-negative and non-empty"));
    }
    Ok(CovarianceK::from_fn(CovarianceKind::NelsonAalen, integrals.len(), |i, j| {
        if i == j {
            integrals[i]
        } else {
            0.0
        }
    }))
}

/// Which estimator supplies the treatment rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Per-bin drops of the Kaplan-Meier curve.
    #[default]
    Km,
    /// Per-bin increments of the Nelson-Aalen cumulative hazard.
    Na,
}

impl std::str::FromStr for Basis {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "km" => Ok(Basis::Km),
            "na" => Ok(Basis::Na),
            other => Err(domain(format!("unknown basis {other}; expected km or na"))),
        }
    }
}

/// One treatment's row of features and the Gaussian used to mimic it.
#[derive(Debug, Clone)]
pub struct CensoredRow {
    pub name: String,
    pub n: usize,
    pub n_events: usize,
    pub row: Vec<f64>,
    pub covariance: CovarianceK,
}

/// Rows for every treatment with at least one event, on the grid `edges`.
pub fn censored_rows(sample: &SortedSample, edges: &[f64], basis: Basis) -> Result<Vec<CensoredRow>> {
    estimators::check_edges(edges)?;
    let names = sample
        .treatments()
        .ok_or_else(|| domain("censored authenticity needs treatment labels"))?;
    let mut rows = Vec::with_capacity(names.len());
    for name in names {
        let part = sample.filter(|i| sample.labels().map(|l| l[i] == name).unwrap_or(false))?;
        let lifetimes = Lifetimes::from_sample(&part)?;
        if lifetimes.n_events() == 0 {
            warn!("treatment {name} has no events and is left out");
            continue;
        }
        let integrals = lifetimes.bin_integrals(edges)?;
        let (row, covariance) = match basis {
            Basis::Km => {
                let km = lifetimes.kaplan_meier();
                let survival: Vec<f64> = edges[1..].iter().map(|&e| km.eval(e)).collect();
                let sharp = sigma_km(&survival, &integrals)?.to_dmatrix();
                let a_inv = differencing_matrix(survival.len());
                let inc: DMatrix<f64> = &a_inv * sharp * a_inv.transpose();
                let k = survival.len();
                let cov = CovarianceK::from_fn(CovarianceKind::KaplanMeier, k, |i, j| 0.5 * (inc[(i, j)] + inc[(j, i)]));
                (survival_drops(&km, edges), cov)
            }
            Basis::Na => (hazard_increments(&lifetimes.nelson_aalen(), edges), sigma_na(&integrals)?),
        };
        rows.push(CensoredRow {
            name,
            n: lifetimes.len(),
            n_events: lifetimes.n_events(),
            row,
            covariance,
        });
    }
    Ok(rows)
}

/// Authenticity of the treatment tree built on per-treatment survival
/// drops or hazard increments over the pooled histogram's bins.
pub fn censored_authenticity(
    sample: &SortedSample,
    hist: &GappedHistogram,
    replicates: usize,
    seed: u64,
    basis: Basis,
) -> Result<AuthenticityReport> {
    let rows = censored_rows(sample, &hist.edges(), basis)?;
    if rows.len() < 2 {
        return Err(domain("fewer than two treatments have events"));
    }
    let names: Vec<String> = rows.iter().map(|r| r.name.clone()).collect();
    let features: Vec<Vec<f64>> = rows.iter().map(|r| r.row.clone()).collect();
    let mimics = rows
        .iter()
        .map(|r| RowMimic::new(&r.row, &r.covariance, r.n as f64))
        .collect::<Result<Vec<_>>>()?;
    authenticity_of_rows(&names, &features, &mimics, replicates, seed)
}

/// Sorted sample with labels and status from parallel columns.
pub fn labelled_lifetimes(times: &[f64], labels: Vec<String>, events: &[bool]) -> Result<SortedSample> {
    sort_sample(times, Some(labels), Some(events.iter().map(|&e| u8::from(e)).collect()))
}

#[cfg(test)]
mod tests;
