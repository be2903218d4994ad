use serde::{Deserialize, Serialize};

use crate::error::{rejected, Error, Result};

/// Counts of each treatment in each bin (`J` rows by `K` columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr")]
pub struct TreatmentMatrix {
    counts: Vec<Vec<u64>>,
    treatment_names: Vec<String>,
    n_j: Vec<u64>,
    edges: Vec<f64>,
}

#[derive(Deserialize)]
struct MatrixRepr {
    counts: Vec<Vec<u64>>,
    treatment_names: Vec<String>,
    n_j: Vec<u64>,
    edges: Vec<f64>,
}

impl TryFrom<MatrixRepr> for TreatmentMatrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        let m = TreatmentMatrix::new(r.treatment_names, r.counts, r.edges)?;
        if m.n_j != r.n_j {
            return Err(rejected("n_j does not match the row sums"));
        }
        Ok(m)
    }
}

impl TreatmentMatrix {
    pub fn new(treatment_names: Vec<String>, counts: Vec<Vec<u64>>, edges: Vec<f64>) -> Result<Self> {
        if counts.len() != treatment_names.len() || counts.is_empty() {
            return Err(rejected("one named row per treatment is required"));
        }
        let k = counts[0].len();
        if k == 0 || counts.iter().any(|r| r.len() != k) {
            return Err(rejected("rows must share a non-zero number of bins"));
        }
        if edges.len() != k + 1 {
            return Err(rejected(format!("{} edges for {k} bins", edges.len())));
        }
        let n_j = counts.iter().map(|r| r.iter().sum()).collect();
        Ok(TreatmentMatrix {
            counts,
            treatment_names,
            n_j,
            edges,
        })
    }

    /// Number of treatments `J`.
    pub fn j(&self) -> usize {
        self.counts.len()
    }

    /// Number of bins `K`.
    pub fn k(&self) -> usize {
        self.counts[0].len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn treatment_names(&self) -> &[String] {
        &self.treatment_names
    }

    pub fn n_j(&self) -> &[u64] {
        &self.n_j
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn n(&self) -> u64 {
        self.n_j.iter().sum()
    }

    pub fn column(&self, k: usize) -> Vec<u64> {
        self.counts.iter().map(|r| r[k]).collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        (0..self.k()).map(|k| self.counts.iter().map(|r| r[k]).sum()).collect()
    }
}
