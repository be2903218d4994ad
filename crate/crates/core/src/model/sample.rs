use serde::{Deserialize, Serialize};

use crate::error::{rejected, Error, Result};

/// A one-dimensional sample held in ascending order.
///
/// `perm[i]` is the original position of the `i`-th smallest value. Treatment
/// labels and censoring flags, when present, stay aligned with the *original*
/// order so that `labels[perm[i]]` is the label of `values[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampleRepr")]
pub struct SortedSample {
    values: Vec<f64>,
    perm: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    status: Option<Vec<u8>>,
}

#[derive(Deserialize)]
struct SampleRepr {
    values: Vec<f64>,
    perm: Vec<usize>,
    #[serde(default)]
    labels: Option<Vec<String>>,
    #[serde(default)]
    status: Option<Vec<u8>>,
}

impl TryFrom<SampleRepr> for SortedSample {
    type Error = Error;

    fn try_from(r: SampleRepr) -> Result<Self> {
        let s = SortedSample {
            values: r.values,
            perm: r.perm,
            labels: r.labels,
            status: r.status,
        };
        s.validate()?;
        Ok(s)
    }
}

/// Sorts `raw` ascending (stable, so ties keep their original order).
pub fn sort_sample(
    raw: &[f64],
    labels: Option<Vec<String>>,
    status: Option<Vec<u8>>,
) -> Result<SortedSample> {
    if raw.is_empty() {
        return Err(rejected("empty sample"));
    }
    if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
        return Err(rejected(format!("non-finite value {} at position {i}", raw[i])));
    }
    let mut perm: Vec<usize> = (0..raw.len()).collect();
    perm.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let values = perm.iter().map(|&i| raw[i]).collect();
    let s = SortedSample {
        values,
        perm,
        labels,
        status,
    };
    s.validate()?;
    Ok(s)
}

/// Rescales to zero mean and unit standard deviation (divisor `n - 1`).
pub fn standardize(sample: &SortedSample) -> Result<SortedSample> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::DegenerateScale(
            "standardization needs at least two values".into(),
        ));
    }
    let mean = sample.values.iter().sum::<f64>() / n as f64;
    let ss: f64 = sample.values.iter().map(|v| (v - mean).powi(2)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::DegenerateScale("constant sample".into()));
    }
    Ok(SortedSample {
        values: sample.values.iter().map(|v| (v - mean) / sd).collect(),
        ..sample.clone()
    })
}

impl SortedSample {
    fn validate(&self) -> Result<()> {
        let n = self.values.len();
        if n == 0 {
            return Err(rejected("empty sample"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(rejected("non-finite value"));
        }
        if self.values.windows(2).any(|w| w[0] > w[1]) {
            return Err(rejected("values are not ascending"));
        }
        if self.perm.len() != n {
            return Err(rejected("perm length differs from values"));
        }
        let mut seen = vec![false; n];
        for &p in &self.perm {
            if p >= n || seen[p] {
                return Err(rejected("perm is not a permutation of 0..n"));
            }
            seen[p] = true;
        }
        if let Some(l) = &self.labels {
            if l.len() != n {
                return Err(rejected(format!("{} labels for {n} values", l.len())));
            }
        }
        if let Some(s) = &self.status {
            if s.len() != n {
                return Err(rejected(format!("{} status flags for {n} values", s.len())));
            }
            if s.iter().any(|&f| f > 1) {
                return Err(rejected("status flags must be 0 or 1"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn status(&self) -> Option<&[u8]> {
        self.status.as_deref()
    }

    /// Label of the `i`-th smallest value.
    pub fn label_sorted(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[self.perm[i]].as_str())
    }

    /// Censoring flag (1 = event) of the `i`-th smallest value.
    pub fn status_sorted(&self, i: usize) -> Option<u8> {
        self.status.as_ref().map(|s| s[self.perm[i]])
    }

    /// Distinct treatment labels in lexicographic order.
    pub fn treatments(&self) -> Option<Vec<String>> {
        let mut t: Vec<String> = self.labels.as_ref()?.clone();
        t.sort();
        t.dedup();
        Some(t)
    }

    /// Keeps only the observations for which `keep(original_index)` holds.
    pub fn filter(&self, keep: impl Fn(usize) -> bool) -> Result<SortedSample> {
        let raw: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        if raw.is_empty() {
            return Err(rejected("filter removed every observation"));
        }
        let mut orig_vals = vec![0.0; self.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            orig_vals[p] = self.values[i];
        }
        let vals: Vec<f64> = raw.iter().map(|&i| orig_vals[i]).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| raw.iter().map(|&i| l[i].clone()).collect());
        let status = self
            .status
            .as_ref()
            .map(|s| raw.iter().map(|&i| s[i]).collect());
        sort_sample(&vals, labels, status)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorts_and_records_permutation() {
        let s = sort_sample(&[3.0, 1.0, 2.0], None, None).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.perm(), &[1, 2, 0]);
    }

    #[test]
    fn singleton_and_ties() {
        let s = sort_sample(&[5.0], None, None).unwrap();
        assert_eq!(s.values(), &[5.0]);
        assert_eq!(s.perm(), &[0]);
        let t = sort_sample(&[1.0, 1.0], None, None).unwrap();
        assert_eq!(t.perm(), &[0, 1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            sort_sample(&[], None, None),
            Err(Error::RejectedInput(_))
        ));
        assert!(sort_sample(&[1.0, f64::NAN], None, None).is_err());
        assert!(sort_sample(&[1.0, f64::INFINITY], None, None).is_err());
        assert!(sort_sample(&[1.0, 2.0], Some(vec!["a".into()]), None).is_err());
        assert!(sort_sample(&[1.0, 2.0], None, Some(vec![1, 2])).is_err());
    }

    #[test]
    fn labels_follow_values() {
        let s = sort_sample(
            &[2.0, 1.0],
            Some(vec!["b".into(), "a".into()]),
            Some(vec![0, 1]),
        )
        .unwrap();
        assert_eq!(s.label_sorted(0), Some("a"));
        assert_eq!(s.status_sorted(0), Some(1));
        assert_eq!(s.treatments().unwrap(), vec!["a", "b"]);
    }

    #[test]
    fn standardize_two_points() {
        let s = standardize(&sort_sample(&[0.0, 2.0], None, None).unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.values()[0] + h).abs() < 1e-15);
        assert!((s.values()[1] - h).abs() < 1e-15);
    }

    #[test]
    fn standardize_fixed_point() {
        let s = standardize(&sort_sample(&[-1.0, 0.0, 1.0], None, None).unwrap()).unwrap();
        assert_eq!(s.values(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn standardize_constant_fails() {
        let s = sort_sample(&[4.0, 4.0, 4.0], None, None).unwrap();
        assert!(matches!(standardize(&s), Err(Error::DegenerateScale(_))));
        let one = sort_sample(&[4.0], None, None).unwrap();
        assert!(standardize(&one).is_err());
    }

    #[test]
    fn filter_keeps_alignment() {
        let s = sort_sample(
            &[3.0, 1.0, 2.0],
            Some(vec!["x".into(), "y".into(), "z".into()]),
            None,
        )
        .unwrap();
        let f = s.filter(|i| i != 1).unwrap();
        assert_eq!(f.values(), &[2.0, 3.0]);
        assert_eq!(f.label_sorted(0), Some("z"));
    }
}
