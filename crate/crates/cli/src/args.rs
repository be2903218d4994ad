use std::path::PathBuf;

use anoht::builder::Extension;
use anoht::hc1d::Linkage;
use anoht::model::GapMethod;
use anoht::survival::{Basis, Weighting};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ConfigLayer, Criterion};

#[derive(Debug, Parser)]
#[command(name = "anoht", version, about = "Possibly-gapped histograms and analysis of histogram")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a histogram of one numeric column.
    Hist(Common),
    /// Compare treatments bin by bin with permutation p-values.
    Anoht1(Common),
    /// Cluster treatments by bin composition and score every branch.
    Anoht2(Common),
    /// Histogram and treatment comparisons for right-censored times.
    Survival(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Hist(c) | Command::Anoht1(c) | Command::Anoht2(c) | Command::Survival(c) => c,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// CSV file with a header row.
    pub input: PathBuf,
    #[arg(long)]
    pub value_col: String,
    /// Treatment label column.
    #[arg(long)]
    pub label_col: Option<String>,
    /// Event indicator column (1 = event, 0 = censored).
    #[arg(long)]
    pub status_col: Option<String>,
    #[arg(long, default_value = "anoht-out")]
    pub out_dir: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
    /// TOML file with default settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LinkageArg {
    Complete,
    Average,
    Ward,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GapMethodArg {
    Boundary,
    Midpoint,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExtensionArg {
    Range,
    Unit,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CriterionArg {
    Band,
    ReferenceLine,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BasisArg {
    Km,
    Na,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightingArg {
    Km,
    Raw,
}

#[derive(Debug, Default, Args)]
pub struct Settings {
    /// Threshold as a fraction of the clustering tree height.
    #[arg(long, conflicts_with = "l0_abs")]
    pub l0_fraction: Option<f64>,
    /// Threshold in squared data units.
    #[arg(long)]
    pub l0_abs: Option<f64>,
    #[arg(long, value_enum)]
    pub linkage: Option<LinkageArg>,
    /// Level of the calibrated uniformity band.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Monte Carlo replicates per calibrated band.
    #[arg(long)]
    pub band_replicates: Option<usize>,
    /// Permutation replicates for phase-1 p-values.
    #[arg(long)]
    pub perm: Option<usize>,
    /// Mimic replicates for branch authenticity.
    #[arg(long)]
    pub mimics: Option<usize>,
    /// Overridden by the GH_SEED environment variable.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub gap_method: Option<GapMethodArg>,
    /// Step used to extend a bin beyond its extreme values.
    #[arg(long, value_enum)]
    pub extension: Option<ExtensionArg>,
    #[arg(long, value_enum)]
    pub criterion: Option<CriterionArg>,
    /// Survival rows from Kaplan-Meier drops or Nelson-Aalen increments.
    #[arg(long, value_enum)]
    pub basis: Option<BasisArg>,
    /// Censored phase-1 counts: Kaplan-Meier weighted or raw events.
    #[arg(long, value_enum)]
    pub weighting: Option<WeightingArg>,
    /// Analyse the raw values instead of z-scores.
    #[arg(long)]
    pub no_standardize: bool,
}

impl Settings {
    pub fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            l0_fraction: self.l0_fraction,
            l0_abs: self.l0_abs,
            linkage: self.linkage.map(|l| match l {
                LinkageArg::Complete => Linkage::Complete,
                LinkageArg::Average => Linkage::Average,
                LinkageArg::Ward => Linkage::Ward,
            }),
            alpha: self.alpha,
            band_replicates: self.band_replicates,
            permutations: self.perm,
            mimics: self.mimics,
            seed: self.seed,
            gap_method: self.gap_method.map(|g| match g {
                GapMethodArg::Boundary => GapMethod::BoundaryExtension,
                GapMethodArg::Midpoint => GapMethod::MidpointDess,
            }),
            extension: self.extension.map(|e| match e {
                ExtensionArg::Range => Extension::RangeScaled,
                ExtensionArg::Unit => Extension::Unit,
            }),
            criterion: self.criterion.map(|c| match c {
                CriterionArg::Band => Criterion::Band,
                CriterionArg::ReferenceLine => Criterion::ReferenceLine,
            }),
            basis: self.basis.map(|b| match b {
                BasisArg::Km => Basis::Km,
                BasisArg::Na => Basis::Na,
            }),
            weighting: self.weighting.map(|w| match w {
                WeightingArg::Km => Weighting::KaplanMeier,
                WeightingArg::Raw => Weighting::RawEvents,
            }),
            standardize: self.no_standardize.then_some(false),
        }
    }
}
