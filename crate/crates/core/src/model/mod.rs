//! Domain types shared by every analysis stage.

mod histogram;
mod sample;
mod treatment;
mod tree;

pub use histogram::{Bin, EdgeMark, GapDecision, GapMethod, GappedHistogram};
pub use sample::{sort_sample, standardize, SortedSample};
pub use treatment::TreatmentMatrix;
pub use tree::{ChildRef, DendroTree, TreeNode};
