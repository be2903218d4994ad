use log::debug;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::covariance::CovarianceK;
use crate::error::{domain, Result};
use crate::rng::stream_rng;

/// Gaussian simulator of one treatment's row of bin masses.
///
/// Draws `mean + L z` where `L L^T` is the covariance with its negative
/// eigenvalues set to zero.
#[derive(Debug, Clone)]
pub struct RowMimic {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
    total: f64,
}

impl RowMimic {
    /// Mimic with covariance `cov / n`.
    pub fn new(mean: &[f64], cov: &CovarianceK, n: f64) -> Result<Self> {
        let k = mean.len();
        if k == 0 || cov.k() != k {
            return Err(domain(format!("{k} masses for a {}-bin covariance", cov.k())));
        }
        if !(n > 0.0 && n.is_finite()) {
            return Err(domain(format!("effective size {n} must be positive")));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(domain("non-finite row mass"));
        }
        let eig = SymmetricEigen::new(cov.to_dmatrix() / n);
        let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let factor = eig.eigenvectors * DMatrix::from_diagonal(&root);
        Ok(RowMimic {
            mean: DVector::from_column_slice(mean),
            factor,
            total: mean.iter().sum(),
        })
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    /// A Gaussian draw before any clamping.
    pub fn draw_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.mean + &self.factor * z).as_slice().to_vec()
    }

    /// A draw with negative masses set to zero, rescaled to the row's original total.
    /// If nothing positive survives, the mean itself is returned.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut v = self.draw_raw(rng);
        v.iter_mut().for_each(|x| *x = x.max(0.0));
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            let scale = self.total / s;
            v.iter_mut().for_each(|x| *x *= scale);
            v
        } else {
            debug!("mimicked row vanished after clamping; using its mean");
            self.mean.as_slice().to_vec()
        }
    }
}

/// One clamped and rescaled draw for a row of proportions from `n_j` observations.
pub fn mimic_row(p_row: &[f64], n_j: u64, seed: u64) -> Result<Vec<f64>> {
    let total: f64 = p_row.iter().sum();
    if total > 1.0 + 1e-12 {
        return Err(domain(format!("row proportions sum to {total} > 1")));
    }
    if n_j == 0 {
        return Err(domain("row mimicking needs n_j >= 1"));
    }
    let cov = super::covariance::sigma_star(p_row)?;
    Ok(RowMimic::new(p_row, &cov, n_j as f64)?.draw(&mut stream_rng(seed, 0)))
}

#[cfg(test)]
mod tests {
    use super::super::covariance::sigma_star;
    use super::*;

    fn raw_draws(p: &[f64], n: f64, count: u64) -> Vec<Vec<f64>> {
        let m = RowMimic::new(p, &sigma_star(p).unwrap(), n).unwrap();
        (0..count).map(|r| m.draw_raw(&mut stream_rng(31, r))).collect()
    }

    #[test]
    fn vertex_rows_are_fixed() {
        let p = [1.0, 0.0, 0.0];
        for seed in 0..20 {
            assert_eq!(mimic_row(&p, 7, seed).unwrap(), p);
        }
    }

    #[test]
    fn large_samples_stay_at_the_mean() {
        let p = [0.2, 0.5, 0.3];
        let v = mimic_row(&p, 10_000_000_000, 1).unwrap();
        assert!(v.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-4));
        let s: f64 = v.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn raw_covariance_matches_the_increment_covariance() {
        let draws = raw_draws(&[0.5, 0.5], 100.0, 100_000);
        let n = draws.len() as f64;
        let mean: Vec<f64> = (0..2).map(|i| draws.iter().map(|d| d[i]).sum::<f64>() / n).collect();
        let cov = |i: usize, j: usize| {
            draws.iter().map(|d| (d[i] - mean[i]) * (d[j] - mean[j])).sum::<f64>() / (n - 1.0)
        };
        for (i, j, want) in [(0, 0, 0.0025), (1, 1, 0.0025), (0, 1, -0.0025)] {
            let got = cov(i, j);
            assert!((got - want).abs() < 0.05 * want.abs(), "cov({i},{j}) = {got}");
        }
    }

    #[test]
    fn raw_mean_is_unbiased() {
        let p = [0.1, 0.25, 0.4, 0.05, 0.2];
        let n_j = 40.0;
        let draws = raw_draws(&p, n_j, 10_000);
        let cov = sigma_star(&p).unwrap();
        for i in 0..p.len() {
            let mean = draws.iter().map(|d| d[i]).sum::<f64>() / draws.len() as f64;
            let se = (cov.matrix[i][i] / n_j / draws.len() as f64).sqrt();
            assert!((mean - p[i]).abs() < 3.0 * se, "coordinate {i}: {mean}");
        }
    }

    #[test]
    fn clamped_draws_keep_the_total() {
        let p = [0.01, 0.02, 0.9, 0.07];
        for seed in 0..50 {
            let v = mimic_row(&p, 5, seed).unwrap();
            assert!(v.iter().all(|&x| x >= 0.0));
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(mimic_row(&p, 5, 3).unwrap(), mimic_row(&p, 5, 3).unwrap());
        assert!(mimic_row(&[0.8, 0.4], 5, 0).is_err());
        assert!(mimic_row(&p, 0, 0).is_err());
    }
}
