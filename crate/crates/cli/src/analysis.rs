//! Library calls behind each subcommand. Every function here is pure: the
//! same sample and configuration give the same report.

use anoht::anoht_local::{bin_compositions, compare_bins, global_test, BinComparison, GlobalTest};
use anoht::anoht_tree::{authenticity, row_normalize, AuthenticityReport};
use anoht::builder::{build_histogram, hamiltonian, Hamiltonian};
use anoht::hc1d::tree_height;
use anoht::model::{standardize, GappedHistogram, SortedSample, TreatmentMatrix};
use anoht::survival::{
    censored_authenticity, censored_histogram, censored_phase1, censored_rows, CensoredHistogram, CensoredPhase1,
};
use anoht::uniformity::{dess_ratio, UniformityTest};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Affine map from the analysed scale back to the input units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub mean: f64,
    pub sd: f64,
}

impl Scale {
    pub fn to_original(&self, v: f64) -> f64 {
        self.mean + self.sd * v
    }
}

/// One row of the per-bin decoding-error table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DessRow {
    pub bin: usize,
    pub count: usize,
    /// Smallest and largest member.
    pub min: f64,
    pub max: f64,
    pub dess: f64,
    /// `(max - min)^2 / 3`, the decoding error expected of a uniform bin.
    pub reference: f64,
    /// `dess / reference`; absent when the bin has a single distinct value.
    pub ratio: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistReport {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
    pub tree_height: Option<f64>,
    pub hamiltonian: Hamiltonian,
    pub histogram: GappedHistogram,
    /// Each bin's `[a, b]` in the input units.
    pub bins_original: Vec<[f64; 2]>,
    pub dess_table: Vec<DessRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composition: Option<TreatmentMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anoht1Report {
    pub histogram: HistReport,
    pub bins: Vec<BinComparison>,
    pub global: GlobalTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anoht2Report {
    pub histogram: HistReport,
    /// Row-normalised composition: each treatment's share in each bin.
    pub proportions: Vec<Vec<f64>>,
    pub authenticity: AuthenticityReport,
}

/// A treatment's survival-based row and its size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRow {
    pub treatment: String,
    pub n: usize,
    pub n_events: usize,
    pub row: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
    pub censored: CensoredHistogram,
    pub bins_original: Vec<[f64; 2]>,
    pub dess_table: Vec<DessRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase1: Option<CensoredPhase1>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<SurvivalRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub authenticity: Option<AuthenticityReport>,
}

/// Standardizes when asked, returning the map back to input units.
pub fn prepare(sample: &SortedSample, cfg: &RunConfig) -> CliResult<(SortedSample, Option<Scale>)> {
    if !cfg.standardize || sample.len() < 2 {
        return Ok((sample.clone(), None));
    }
    let z = standardize(sample)?;
    let v = sample.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    Ok((z, Some(Scale { mean, sd })))
}

pub fn dess_table(hist: &GappedHistogram, values: &[f64], test: &UniformityTest) -> CliResult<Vec<DessRow>> {
    hist.bins
        .iter()
        .enumerate()
        .map(|(k, bin)| {
            let members = &values[bin.members.clone()];
            let (min, max) = (members[0], members[members.len() - 1]);
            let reference = (max - min).powi(2) / 3.0;
            Ok(DessRow {
                bin: k,
                count: bin.count(),
                min,
                max,
                dess: bin.dess,
                reference,
                ratio: (max > min).then(|| dess_ratio(members, min, max)).transpose()?,
                accepted: test.accepts_own_range(members)?,
            })
        })
        .collect()
}

fn original_bins(hist: &GappedHistogram, scale: Option<Scale>) -> Vec<[f64; 2]> {
    let back = |v: f64| scale.map_or(v, |s| s.to_original(v));
    hist.bins.iter().map(|b| [back(b.a), back(b.b)]).collect()
}

pub fn run_hist(sample: &SortedSample, cfg: &RunConfig) -> CliResult<HistReport> {
    let (z, scale) = prepare(sample, cfg)?;
    let test = cfg.uniformity_test()?;
    let (histogram, tree) = build_histogram(&z, &cfg.build_options(), &test)?;
    let composition = match z.labels() {
        Some(_) => Some(bin_compositions(&histogram, &z)?),
        None => None,
    };
    Ok(HistReport {
        n: z.len(),
        scale,
        tree_height: (z.len() > 1).then(|| tree_height(&tree)).transpose()?,
        hamiltonian: hamiltonian(&histogram, histogram.l0),
        bins_original: original_bins(&histogram, scale),
        dess_table: dess_table(&histogram, z.values(), &test)?,
        histogram,
        composition,
    })
}

fn needs_labels(sample: &SortedSample, what: &str) -> CliResult<()> {
    match sample.treatments() {
        Some(t) if t.len() >= 2 => Ok(()),
        Some(_) => Err(CliError::Config(format!("{what} needs at least two treatments"))),
        None => Err(CliError::Config(format!("{what} needs --label-col"))),
    }
}

pub fn run_anoht1(sample: &SortedSample, cfg: &RunConfig) -> CliResult<Anoht1Report> {
    needs_labels(sample, "anoht1")?;
    let histogram = run_hist(sample, cfg)?;
    let t = histogram.composition.as_ref().expect("labelled sample");
    Ok(Anoht1Report {
        bins: compare_bins(t, cfg.permutations, cfg.seed)?,
        global: global_test(t, cfg.permutations, cfg.seed)?,
        histogram,
    })
}

pub fn run_anoht2(sample: &SortedSample, cfg: &RunConfig) -> CliResult<Anoht2Report> {
    needs_labels(sample, "anoht2")?;
    let histogram = run_hist(sample, cfg)?;
    let t = histogram.composition.as_ref().expect("labelled sample");
    Ok(Anoht2Report {
        proportions: row_normalize(t)?,
        authenticity: authenticity(t, cfg.mimics, cfg.seed)?,
        histogram,
    })
}

pub fn run_survival(sample: &SortedSample, cfg: &RunConfig) -> CliResult<SurvivalReport> {
    if sample.status().is_none() {
        return Err(CliError::Config("survival needs --status-col".into()));
    }
    let (z, scale) = prepare(sample, cfg)?;
    let test = cfg.uniformity_test()?;
    let (censored, _, uncensored) = censored_histogram(&z, &cfg.build_options(), &test)?;
    let dess_table = dess_table(&censored.histogram, uncensored.values(), &test)?;
    let labelled = z.treatments().is_some_and(|t| t.len() >= 2);
    let (phase1, rows, authenticity) = if labelled {
        let edges = censored.histogram.edges();
        let rows = censored_rows(&z, &edges, cfg.basis)?
            .into_iter()
            .map(|r| SurvivalRow {
                treatment: r.name,
                n: r.n,
                n_events: r.n_events,
                row: r.row,
            })
            .collect();
        (
            Some(censored_phase1(&z, &censored.histogram, cfg.permutations, cfg.seed, cfg.weighting)?),
            Some(rows),
            Some(censored_authenticity(&z, &censored.histogram, cfg.mimics, cfg.seed, cfg.basis)?),
        )
    } else {
        (None, None, None)
    };
    Ok(SurvivalReport {
        scale,
        bins_original: original_bins(&censored.histogram, scale),
        dess_table,
        censored,
        phase1,
        rows,
        authenticity,
    })
}
