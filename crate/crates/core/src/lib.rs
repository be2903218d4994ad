//! Possibly-gapped histograms for one-dimensional samples and the analysis
//! of histogram (ANOHT) built on them.

// Negated comparisons below deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anoht_local;
pub mod anoht_tree;
pub mod builder;
pub mod error;
pub mod hc1d;
pub mod model;
pub mod rng;
pub mod survival;
pub mod uniformity;

pub use error::{Error, Result};
