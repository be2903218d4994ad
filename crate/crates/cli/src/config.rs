use std::path::Path;

use anoht::builder::{BuildOptions, Extension, L0Spec};
use anoht::hc1d::Linkage;
use anoht::model::GapMethod;
use anoht::survival::{Basis, Weighting};
use anoht::uniformity::UniformityTest;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable that overrides the seed given on the command line.
pub const SEED_ENV: &str = "GH_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Calibrated two-sided band on the decoding-error ratio.
    #[default]
    Band,
    /// Accept when the decoding error is at most `(b - a)^2 / 3`.
    ReferenceLine,
}

/// Threshold on the per-node decoding error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L0Setting {
    Fraction(f64),
    Absolute(f64),
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub l0: L0Setting,
    pub linkage: Linkage,
    pub alpha: f64,
    pub band_replicates: usize,
    pub permutations: usize,
    pub mimics: usize,
    pub seed: u64,
    pub gap_method: GapMethod,
    pub extension: Extension,
    pub criterion: Criterion,
    pub basis: Basis,
    pub weighting: Weighting,
    pub standardize: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            l0: L0Setting::Fraction(0.1),
            linkage: Linkage::Complete,
            alpha: 0.05,
            band_replicates: 2000,
            permutations: 10_000,
            mimics: 10_000,
            seed: 1,
            gap_method: GapMethod::BoundaryExtension,
            extension: Extension::RangeScaled,
            criterion: Criterion::Band,
            basis: Basis::Km,
            weighting: Weighting::KaplanMeier,
            standardize: true,
        }
    }
}

/// A partial configuration: every field is optional so that layers can be
/// stacked (flags over file over defaults).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub l0_fraction: Option<f64>,
    pub l0_abs: Option<f64>,
    pub linkage: Option<Linkage>,
    pub alpha: Option<f64>,
    pub band_replicates: Option<usize>,
    pub permutations: Option<usize>,
    pub mimics: Option<usize>,
    pub seed: Option<u64>,
    pub gap_method: Option<GapMethod>,
    pub extension: Option<Extension>,
    pub criterion: Option<Criterion>,
    pub basis: Option<Basis>,
    pub weighting: Option<Weighting>,
    pub standardize: Option<bool>,
}

impl ConfigLayer {
    pub fn from_toml_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    fn apply(&self, c: &mut RunConfig) -> CliResult<()> {
        match (self.l0_fraction, self.l0_abs) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("l0_fraction and l0_abs are mutually exclusive".into()))
            }
            (Some(f), None) => c.l0 = L0Setting::Fraction(f),
            (None, Some(a)) => c.l0 = L0Setting::Absolute(a),
            (None, None) => {}
        }
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { c.$field = v; })* };
        }
        take!(
            linkage,
            alpha,
            band_replicates,
            permutations,
            mimics,
            seed,
            gap_method,
            extension,
            criterion,
            basis,
            weighting,
            standardize
        );
        Ok(())
    }
}

impl RunConfig {
    /// Stacks `flags` over `file` over the defaults, then applies a seed
    /// from the environment if one is given.
    pub fn resolve(file: Option<&ConfigLayer>, flags: &ConfigLayer, env_seed: Option<&str>) -> CliResult<Self> {
        let mut c = RunConfig::default();
        if let Some(f) = file {
            f.apply(&mut c)?;
        }
        flags.apply(&mut c)?;
        if let Some(s) = env_seed {
            c.seed = s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        match self.l0 {
            L0Setting::Fraction(f) if !(f > 0.0 && f <= 1.0) => return bad(format!("l0 fraction {f} is outside (0, 1]")),
            L0Setting::Absolute(a) if !(a.is_finite() && a >= 0.0) => {
                return bad(format!("absolute l0 {a} must be finite and non-negative"))
            }
            _ => {}
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} is outside (0, 1)", self.alpha));
        }
        for (name, v) in [
            ("band_replicates", self.band_replicates),
            ("permutations", self.permutations),
            ("mimics", self.mimics),
        ] {
            if v < 1 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            l0: match self.l0 {
                L0Setting::Fraction(f) => L0Spec::FractionOfTreeHeight(f),
                L0Setting::Absolute(a) => L0Spec::Absolute(a),
            },
            linkage: self.linkage,
            gap_method: self.gap_method,
            extension: self.extension,
        }
    }

    pub fn uniformity_test(&self) -> CliResult<UniformityTest> {
        Ok(match self.criterion {
            Criterion::Band => UniformityTest::calibrated(self.alpha, self.band_replicates, self.seed)?,
            Criterion::ReferenceLine => UniformityTest::ReferenceLine,
        })
    }
}
