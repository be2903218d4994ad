use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{GapDecision, GapMethod};
use crate::uniformity::UniformityTest;

/// Scale of the step used to extend a bin beyond its extreme observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// `(X_(n*) - X_(1)) / (n* + 1)`: the expected uniform spacing on the bin's own range.
    #[default]
    RangeScaled,
    /// `1 / (n* + 1)`: the spacing measured on the unit scale, whatever the bin's range.
    Unit,
}

/// Extended ends `(a_hat, b_hat)` of a sorted bin, and whether the bin is
/// too thin (one distinct value) for the extension to mean anything.
pub fn extended_ends(values: &[f64], extension: Extension) -> Result<(f64, f64, bool)> {
    let (Some(&lo), Some(&hi)) = (values.first(), values.last()) else {
        return Err(domain("extended ends of an empty bin"));
    };
    if hi == lo {
        return Ok((lo, hi, true));
    }
    let step = match extension {
        Extension::RangeScaled => (hi - lo) / (values.len() + 1) as f64,
        Extension::Unit => 1.0 / (values.len() + 1) as f64,
    };
    Ok((lo - step, hi + step, false))
}

fn check_order(left: &[f64], right: &[f64]) -> Result<()> {
    match (left.last(), right.first()) {
        (Some(l), Some(r)) if l <= r => Ok(()),
        (Some(_), Some(_)) => Err(domain("left bin must lie entirely left of the right bin")),
        _ => Err(domain("gap check needs two non-empty bins")),
    }
}

/// Declares a gap when the left bin's extended right end falls short of
/// the right bin's extended left end.
pub fn check_gap_boundaries(left: &[f64], right: &[f64], extension: Extension) -> Result<GapDecision> {
    check_order(left, right)?;
    let (_, bhat, thin_l) = extended_ends(left, extension)?;
    let (ahat, _, thin_r) = extended_ends(right, extension)?;
    Ok(GapDecision {
        method: GapMethod::BoundaryExtension,
        is_gap: bhat < ahat,
        left_bhat: bhat,
        right_ahat: ahat,
        low_confidence: thin_l || thin_r,
    })
}

/// Moves both facing edges to the midpoint of the facing observations and
/// declares a gap unless both stretched bins still pass `test`.
pub fn check_gap_midpoint(
    left: &[f64],
    right: &[f64],
    test: &UniformityTest,
    extension: Extension,
) -> Result<GapDecision> {
    check_order(left, right)?;
    let lmin = left[0];
    let lmax = left[left.len() - 1];
    let rmin = right[0];
    let rmax = right[right.len() - 1];
    let mid = 0.5 * (lmax + rmin);
    let passes = |v: &[f64], a: f64, b: f64| -> Result<bool> {
        if a < b {
            test.accepts(v, a, b)
        } else {
            Ok(true)
        }
    };
    let uniform = passes(left, lmin, mid)? && passes(right, mid, rmax)?;
    let (_, bhat, thin_l) = extended_ends(left, extension)?;
    let (ahat, _, thin_r) = extended_ends(right, extension)?;
    Ok(GapDecision {
        method: GapMethod::MidpointDess,
        is_gap: !uniform,
        left_bhat: bhat,
        right_ahat: ahat,
        low_confidence: thin_l || thin_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    fn cloud(lo: f64, hi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        let mut v: Vec<f64> = (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn boundary_formula_substitution() {
        let d = check_gap_boundaries(&grid(0.0, 1.0, 9), &grid(2.0, 3.0, 9), Extension::RangeScaled).unwrap();
        assert!((d.left_bhat - 1.1).abs() < 1e-12);
        assert!((d.right_ahat - 1.9).abs() < 1e-12);
        assert!(d.is_gap && !d.low_confidence);
    }

    #[test]
    fn unit_extension_ignores_range() {
        let (a, b, _) = extended_ends(&grid(0.0, 4.0, 9), Extension::Unit).unwrap();
        assert!((a + 0.1).abs() < 1e-12 && (b - 4.1).abs() < 1e-12);
        let (a, b, _) = extended_ends(&grid(0.0, 4.0, 9), Extension::RangeScaled).unwrap();
        assert!((a + 0.4).abs() < 1e-12 && (b - 4.4).abs() < 1e-12);
    }

    #[test]
    fn singleton_bins_are_low_confidence() {
        let d = check_gap_boundaries(&[1.0], &[1.5], Extension::RangeScaled).unwrap();
        assert_eq!((d.left_bhat, d.right_ahat), (1.0, 1.5));
        assert!(d.is_gap && d.low_confidence);
    }

    #[test]
    fn touching_bins_are_not_gapped() {
        let d = check_gap_boundaries(&grid(0.0, 1.0, 5), &grid(1.0, 2.0, 5), Extension::RangeScaled).unwrap();
        assert!(!d.is_gap);
    }

    #[test]
    fn wrong_order_rejected() {
        assert!(check_gap_boundaries(&[2.0], &[1.0], Extension::RangeScaled).is_err());
        assert!(check_gap_boundaries(&[], &[1.0], Extension::RangeScaled).is_err());
    }

    #[test]
    fn shift_invariance() {
        let l = cloud(0.0, 1.0, 20, 1);
        let r = cloud(1.5, 2.0, 12, 2);
        let d0 = check_gap_boundaries(&l, &r, Extension::RangeScaled).unwrap();
        let s = 7.25;
        let ls: Vec<f64> = l.iter().map(|v| v + s).collect();
        let rs: Vec<f64> = r.iter().map(|v| v + s).collect();
        let d1 = check_gap_boundaries(&ls, &rs, Extension::RangeScaled).unwrap();
        assert_eq!(d0.is_gap, d1.is_gap);
        assert!((d1.left_bhat - d0.left_bhat - s).abs() < 1e-9);
        assert!((d1.right_ahat - d0.right_ahat - s).abs() < 1e-9);
    }

    #[test]
    fn midpoint_split_cloud_is_contiguous() {
        let test = UniformityTest::calibrated(0.05, 2000, 3).unwrap();
        let v = cloud(0.0, 1.0, 400, 8);
        let cut = v.partition_point(|&x| x < 0.5);
        let d = check_gap_midpoint(&v[..cut], &v[cut..], &test, Extension::RangeScaled).unwrap();
        assert!(!d.is_gap);
    }

    #[test]
    fn midpoint_far_clouds_are_gapped() {
        let test = UniformityTest::calibrated(0.05, 2000, 3).unwrap();
        let l = cloud(0.0, 1.0, 200, 4);
        let r = cloud(9.0, 10.0, 200, 5);
        assert!(check_gap_midpoint(&l, &r, &test, Extension::RangeScaled).unwrap().is_gap);
        assert!(check_gap_boundaries(&l, &r, Extension::RangeScaled).unwrap().is_gap);
    }

    #[test]
    fn midpoint_shared_point_is_contiguous() {
        let test = UniformityTest::calibrated(0.05, 2000, 3).unwrap();
        let l = cloud(0.0, 1.0, 60, 6);
        let mut l = l;
        *l.last_mut().unwrap() = 1.0;
        let mut r: Vec<f64> = l.iter().map(|v| v + 1.0).collect();
        r[0] = 1.0;
        let d = check_gap_midpoint(&l, &r, &test, Extension::RangeScaled).unwrap();
        assert!(!d.is_gap);
    }
}
