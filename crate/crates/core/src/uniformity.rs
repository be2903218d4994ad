//! Uniform order-statistic moments and the decoding-error (DESS) criterion.
//!
//! For `m` values in `[a, b]` rescaled to `u = (x - a) / (b - a)` the decoding
//! error is
//!
//! ```text
//! DESS = (b - a)^2 * [ m / (6 (m + 1)) + sum_k (u_(k) - k / (m + 1))^2 ]
//! ```
//!
//! which concentrates near `(b - a)^2 / 3` when the values are uniform. A bin
//! is accepted as uniform when the ratio `DESS / ((b - a)^2 / 3)` passes the
//! configured [`UniformityTest`].

use std::collections::BTreeMap;
use std::sync::Mutex;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::{mix, stream_rng};

/// `E[U_(k)] = k / (n + 1)` for the `k`-th of `n` standard uniform order statistics.
pub fn order_stat_mean(k: usize, n: usize) -> Result<f64> {
    if k == 0 || k > n {
        return Err(domain(format!("order statistic {k} of {n}")));
    }
    Ok(k as f64 / (n + 1) as f64)
}

/// `Var[U_(k)] = k (n - k + 1) / ((n + 1)^2 (n + 2))`.
pub fn order_stat_variance(k: usize, n: usize) -> Result<f64> {
    if k == 0 || k > n {
        return Err(domain(format!("order statistic {k} of {n}")));
    }
    let (k, n) = (k as f64, n as f64);
    Ok(k * (n - k + 1.0) / ((n + 1.0).powi(2) * (n + 2.0)))
}

/// `sum_k Var[U_(k)] = n / (6 (n + 1))`.
pub fn total_order_stat_variance(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(domain("total variance needs n >= 1"));
    }
    Ok(n as f64 / (6.0 * (n + 1) as f64))
}

/// Decoding error sum of squares of sorted `values` against the uniform law on `[a, b]`.
pub fn dess(values: &[f64], a: f64, b: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(domain("DESS of an empty bin"));
    }
    if !(a < b) {
        return Err(domain(format!("DESS needs a < b, got [{a}, {b}]")));
    }
    let w = b - a;
    Ok(w * w * dess_unit(values, a, w)?)
}

/// The bracketed term of the DESS, i.e. the decoding error on the unit scale.
fn dess_unit(values: &[f64], a: f64, w: f64) -> Result<f64> {
    let m = values.len();
    let mp1 = (m + 1) as f64;
    let mut ss = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let u = (x - a) / w;
        if !(-1e-12..=1.0 + 1e-12).contains(&u) {
            return Err(domain(format!("value {x} outside [{a}, {}]", a + w)));
        }
        let d = u - (i + 1) as f64 / mp1;
        ss += d * d;
    }
    Ok(m as f64 / (6.0 * mp1) + ss)
}

/// `DESS / ((b - a)^2 / 3)`, equal to one in expectation for large uniform samples.
pub fn dess_ratio(values: &[f64], a: f64, b: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(domain("DESS of an empty bin"));
    }
    if !(a < b) {
        return Err(domain(format!("DESS needs a < b, got [{a}, {b}]")));
    }
    Ok(3.0 * dess_unit(values, a, b - a)?)
}

/// DESS over the values' own range; zero when every value is equal.
pub fn dess_own_range(values: &[f64]) -> Result<f64> {
    match (values.first(), values.last()) {
        (Some(&lo), Some(&hi)) if hi > lo => dess(values, lo, hi),
        (Some(_), Some(_)) => Ok(0.0),
        _ => Err(domain("DESS of an empty bin")),
    }
}

/// Two-sided acceptance band on the DESS ratio for samples of size `n_calibration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DessBand {
    pub lo: f64,
    pub hi: f64,
    pub alpha: f64,
    pub n_calibration: usize,
    pub m_replicates: usize,
}

impl DessBand {
    pub fn contains(&self, ratio: f64) -> bool {
        self.lo <= ratio && ratio <= self.hi
    }
}

/// Monte Carlo quantile band of `3 * dess(U, 0, 1)` over `m_replicates`
/// samples of `n` standard uniforms. Replicate `r` uses stream `r` of `seed`.
pub fn calibrate_band(n: usize, alpha: f64, m_replicates: usize, seed: u64) -> Result<DessBand> {
    if n < 2 {
        return Err(domain("band calibration needs n >= 2"));
    }
    if m_replicates < 100 {
        return Err(domain("band calibration needs at least 100 replicates"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut ratios: Vec<f64> = (0..m_replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r);
            let mut u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            u.sort_by(f64::total_cmp);
            3.0 * dess_unit(&u, 0.0, 1.0).expect("uniform draws lie in [0, 1]")
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    Ok(DessBand {
        lo: quantile_sorted(&ratios, alpha / 2.0),
        hi: quantile_sorted(&ratios, 1.0 - alpha / 2.0),
        alpha,
        n_calibration: n,
        m_replicates,
    })
}

/// Linear-interpolation quantile of sorted data (the usual "type 7").
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// True iff the DESS ratio of `values` on `[a, b]` falls inside `band`.
/// A single value is accepted outright.
pub fn dess_criterion(values: &[f64], a: f64, b: f64, band: &DessBand) -> Result<bool> {
    let r = dess_ratio(values, a, b)?;
    Ok(values.len() == 1 || band.contains(r))
}

const EXACT_GRID: usize = 64;
const GRID_STEP: f64 = 1.05;
const GRID_CAP: usize = 4096;

/// Calibrated bands for every bin size, computed lazily and cached.
///
/// Sizes up to 64 are calibrated exactly; larger sizes snap to a geometric
/// grid (5% steps) capped at 4096, beyond which the ratio's law has settled.
/// The band for a grid size depends only on `(seed, size)`.
#[derive(Debug)]
pub struct BandTable {
    alpha: f64,
    replicates: usize,
    seed: u64,
    cache: Mutex<BTreeMap<usize, DessBand>>,
}

impl Clone for BandTable {
    fn clone(&self) -> Self {
        BandTable {
            alpha: self.alpha,
            replicates: self.replicates,
            seed: self.seed,
            cache: Mutex::new(self.cache.lock().expect("band cache poisoned").clone()),
        }
    }
}

impl BandTable {
    pub fn new(alpha: f64, replicates: usize, seed: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if replicates < 100 {
            return Err(domain("band calibration needs at least 100 replicates"));
        }
        Ok(BandTable {
            alpha,
            replicates,
            seed,
            cache: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn grid_size(m: usize) -> usize {
        if m <= EXACT_GRID {
            return m.max(2);
        }
        let steps = ((m as f64 / EXACT_GRID as f64).ln() / GRID_STEP.ln()).round();
        ((EXACT_GRID as f64 * GRID_STEP.powf(steps)).round() as usize).min(GRID_CAP)
    }

    /// Band used for bins holding `m` values.
    pub fn band_for(&self, m: usize) -> DessBand {
        let g = Self::grid_size(m);
        if let Some(b) = self.cache.lock().expect("band cache poisoned").get(&g) {
            return *b;
        }
        let band = calibrate_band(g, self.alpha, self.replicates, mix(self.seed, g as u64))
            .expect("parameters validated at construction");
        *self
            .cache
            .lock()
            .expect("band cache poisoned")
            .entry(g)
            .or_insert(band)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Serializable description of the acceptance rule that built a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CriterionInfo {
    CalibratedBand {
        alpha: f64,
        replicates: usize,
        seed: u64,
    },
    ReferenceLine,
}

/// Rule deciding whether a bin is consistent with the uniform law.
#[derive(Debug, Clone)]
pub enum UniformityTest {
    /// Two-sided Monte Carlo band per bin size.
    Calibrated(BandTable),
    /// Accept when the decoding error does not exceed `(b - a)^2 / 3`.
    ReferenceLine,
}

impl UniformityTest {
    pub fn calibrated(alpha: f64, replicates: usize, seed: u64) -> Result<Self> {
        Ok(UniformityTest::Calibrated(BandTable::new(alpha, replicates, seed)?))
    }

    /// Applies the rule to sorted `values` on `[a, b]`. A single value, or a
    /// run of identical values, is uniform by convention.
    pub fn accepts(&self, values: &[f64], a: f64, b: f64) -> Result<bool> {
        let (Some(&first), Some(&last)) = (values.first(), values.last()) else {
            return Err(domain("uniformity test of an empty bin"));
        };
        if values.len() == 1 || (first == last && a == b) {
            return Ok(true);
        }
        let r = dess_ratio(values, a, b)?;
        Ok(match self {
            UniformityTest::Calibrated(t) => t.band_for(values.len()).contains(r),
            UniformityTest::ReferenceLine => r <= 1.0,
        })
    }

    /// [`accepts`](Self::accepts) on the values' own range.
    pub fn accepts_own_range(&self, values: &[f64]) -> Result<bool> {
        let (Some(&a), Some(&b)) = (values.first(), values.last()) else {
            return Err(domain("uniformity test of an empty bin"));
        };
        self.accepts(values, a, b)
    }

    pub fn info(&self) -> CriterionInfo {
        match self {
            UniformityTest::Calibrated(t) => CriterionInfo::CalibratedBand {
                alpha: t.alpha,
                replicates: t.replicates,
                seed: t.seed,
            },
            UniformityTest::ReferenceLine => CriterionInfo::ReferenceLine,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn uniform_sample(m: usize, a: f64, b: f64, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        let mut v: Vec<f64> = (0..m).map(|_| a + (b - a) * rng.random::<f64>()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn order_stat_means() {
        assert_eq!(order_stat_mean(1, 1).unwrap(), 0.5);
        assert_eq!(order_stat_mean(3, 5).unwrap(), 0.5);
        assert!((order_stat_mean(2, 9).unwrap() - 0.2).abs() < 1e-15);
        assert!(order_stat_mean(0, 3).is_err());
        assert!(order_stat_mean(4, 3).is_err());
    }

    #[test]
    fn total_variance_values() {
        assert!((total_order_stat_variance(1).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!((total_order_stat_variance(5).unwrap() - 5.0 / 36.0).abs() < 1e-15);
        assert!((total_order_stat_variance(1_000_000).unwrap() - 1.0 / 6.0).abs() < 1e-6);
        assert!(total_order_stat_variance(0).is_err());
    }

    #[test]
    fn total_variance_matches_sum_of_variances() {
        for n in [1, 2, 3, 10, 57, 400] {
            let sum: f64 = (1..=n).map(|k| order_stat_variance(k, n).unwrap()).sum();
            assert!((sum - total_order_stat_variance(n).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn dess_closed_forms() {
        // single midpoint: (b - a)^2 (1/12 + 0)
        let d = dess(&[2.0], 1.0, 3.0).unwrap();
        assert!((d - 4.0 / 12.0).abs() < 1e-15);
        // exact expected positions: only the variance term remains
        let d = dess(&[0.25, 0.5, 0.75], 0.0, 1.0).unwrap();
        assert!((d - 0.125).abs() < 1e-15);
    }

    #[test]
    fn dess_errors() {
        assert!(dess(&[], 0.0, 1.0).is_err());
        assert!(dess(&[0.5], 1.0, 1.0).is_err());
        assert!(dess(&[1.5], 0.0, 1.0).is_err());
    }

    #[test]
    fn dess_large_uniform_near_one_third() {
        let v = uniform_sample(20_000, 0.0, 1.0, 11);
        let d = dess(&v, 0.0, 1.0).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 0.1, "dess = {d}");
    }

    #[test]
    fn subdivision_lowers_squared_widths() {
        let cuts: [f64; 5] = [0.0, 0.1, 0.45, 0.5, 1.0];
        let total: f64 = cuts.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        assert!(total < 1.0);
    }

    #[test]
    fn band_properties() {
        let b1000 = calibrate_band(1000, 0.05, 2000, 5).unwrap();
        assert!(b1000.lo < 1.0 && 1.0 < b1000.hi, "{b1000:?}");
        // The sum of squared order-statistic deviations tends to the
        // Cramer-von Mises law, so the band settles instead of shrinking:
        // its upper end approaches 3 * (1/6 + 0.581).
        let b4000 = calibrate_band(4000, 0.05, 2000, 5).unwrap();
        let (w1, w4) = (b1000.hi - b1000.lo, b4000.hi - b4000.lo);
        assert!((w1 - w4).abs() < 0.1 * w4, "{w1} vs {w4}");
        assert!((b4000.hi - 3.0 * (1.0 / 6.0 + 0.581)).abs() < 0.15, "{b4000:?}");
        let b2 = calibrate_band(2, 0.5, 2000, 5).unwrap();
        assert!(b2.lo > 0.0 && b2.lo < b2.hi);
        assert_eq!(calibrate_band(50, 0.05, 500, 9).unwrap(), calibrate_band(50, 0.05, 500, 9).unwrap());
        assert!(calibrate_band(1, 0.05, 500, 9).is_err());
        assert!(calibrate_band(5, 0.05, 99, 9).is_err());
    }

    #[test]
    fn band_independent_of_worker_count() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| calibrate_band(300, 0.05, 1000, 3).unwrap());
        let multi = calibrate_band(300, 0.05, 1000, 3).unwrap();
        assert_eq!(single, multi);
    }

    #[test]
    fn regular_grid_is_too_regular_for_two_sided_band() {
        // u_(k) = k/(m+1) leaves only the variance term: ratio = m / (2 (m+1)).
        let m = 100;
        let v: Vec<f64> = (1..=m).map(|k| k as f64 / (m + 1) as f64).collect();
        let r = dess_ratio(&v, 0.0, 1.0).unwrap();
        assert!((r - 100.0 / 202.0).abs() < 1e-12);
        let band = calibrate_band(m, 0.05, 2000, 1).unwrap();
        assert!(r < band.lo);
        assert!(!dess_criterion(&v, 0.0, 1.0, &band).unwrap());
        assert!(UniformityTest::ReferenceLine.accepts(&v, 0.0, 1.0).unwrap());
    }

    #[test]
    fn point_mass_is_rejected() {
        let v = vec![0.5; 50];
        let band = calibrate_band(50, 0.05, 2000, 1).unwrap();
        let r = dess_ratio(&v, 0.0, 1.0).unwrap();
        assert!(r > band.hi, "ratio {r}");
        assert!(!dess_criterion(&v, 0.0, 1.0, &band).unwrap());
        let edge = vec![0.0; 50];
        assert!(!dess_criterion(&edge, 0.0, 1.0, &band).unwrap());
    }

    #[test]
    fn single_value_always_uniform() {
        let band = calibrate_band(2, 0.05, 200, 1).unwrap();
        assert!(dess_criterion(&[0.0], 0.0, 1.0, &band).unwrap());
        let t = UniformityTest::calibrated(0.05, 200, 1).unwrap();
        assert!(t.accepts(&[3.0], 3.0, 3.0).unwrap());
        assert!(t.accepts_own_range(&[3.0, 3.0, 3.0]).unwrap());
    }

    #[test]
    fn acceptance_rate_near_nominal() {
        let band = calibrate_band(500, 0.05, 2000, 77).unwrap();
        let accepted = (0..400)
            .filter(|&r| {
                let v = uniform_sample(500, 0.0, 1.0, 1000 + r);
                dess_criterion(&v, 0.0, 1.0, &band).unwrap()
            })
            .count();
        let rate = accepted as f64 / 400.0;
        assert!((0.91..=0.99).contains(&rate), "acceptance rate {rate}");
    }

    #[test]
    fn mean_dess_concentrates() {
        for (a, b) in [(0.0, 1.0), (-5.0, 3.0)] {
            let mean: f64 = (0..200)
                .map(|r| dess(&uniform_sample(1000, a, b, 500 + r), a, b).unwrap())
                .sum::<f64>()
                / 200.0;
            let target = (b - a) * (b - a) / 3.0;
            assert!((mean - target).abs() < 0.1 * target);
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(BandTable::grid_size(1), 2);
        assert_eq!(BandTable::grid_size(64), 64);
        assert!(BandTable::grid_size(65) >= 64);
        assert_eq!(BandTable::grid_size(1_000_000), GRID_CAP);
        let g = BandTable::grid_size(1000);
        assert!((g as f64 / 1000.0 - 1.0).abs() < 0.03);
    }

    proptest! {
        #[test]
        fn dess_shift_and_scale(
            raw in prop::collection::vec(0.0f64..1.0, 1..40),
            c in 0.01f64..100.0,
            d in -100.0f64..100.0,
        ) {
            let mut x = raw.clone();
            x.sort_by(f64::total_cmp);
            let base = dess(&x, 0.0, 1.0).unwrap();
            let y: Vec<f64> = x.iter().map(|v| c * v + d).collect();
            let moved = dess(&y, d, c + d).unwrap();
            prop_assert!((moved - c * c * base).abs() <= 1e-9 * (1.0 + c * c * base));
        }
    }
}
