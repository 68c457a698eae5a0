//! Empirical distances to the standard normal law and moment statistics.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{GeoError, Result};
use crate::point_process::SeedState;

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Normal quantile, polished by Newton steps on [`std_normal_cdf`] so that
/// the round trip is accurate to a few ulps.
pub fn std_normal_quantile(p: f64) -> f64 {
    let mut x = Normal::standard().inverse_cdf(p);
    if !x.is_finite() {
        return x;
    }
    for _ in 0..3 {
        let step = (std_normal_cdf(x) - p) / std_normal_pdf(x);
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    values: Vec<f64>,
    label: String,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GeoError::param("values", format!("non-finite value at index {i}")));
        }
        Ok(SampleSet {
            values,
            label: label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Unbiased sample variance (`NaN` below two values).
    pub fn variance(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return f64::NAN;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
    }

    fn sorted(&self) -> Result<Vec<f64>> {
        if self.values.is_empty() {
            return Err(GeoError::InsufficientData("empty sample".into()));
        }
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }
}

/// Kolmogorov distance between the empirical law and `N(0,1)`.
pub fn empirical_dk(s: &SampleSet) -> Result<f64> {
    let v = s.sorted()?;
    let n = v.len() as f64;
    let mut best = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let p = std_normal_cdf(x);
        let hi = (i + 1) as f64 / n;
        let lo = i as f64 / n;
        best = best.max((hi - p).abs()).max((lo - p).abs());
    }
    Ok(best.min(1.0))
}

/// Antiderivative of the normal CDF, zero at `-inf`.
fn cdf_primitive(x: f64) -> f64 {
    x * std_normal_cdf(x) + std_normal_pdf(x)
}

/// 1-Wasserstein distance between the empirical law and `N(0,1)`,
/// `int |F_n - Phi|`, integrated exactly piece by piece.
pub fn empirical_dw(s: &SampleSet) -> Result<f64> {
    let v = s.sorted()?;
    let n = v.len();
    let mut total = cdf_primitive(v[0]) + cdf_primitive(-v[n - 1]);
    for i in 0..n - 1 {
        let (lo, hi) = (v[i], v[i + 1]);
        if hi <= lo {
            continue;
        }
        let c = (i + 1) as f64 / n as f64;
        let z = std_normal_quantile(c).clamp(lo, hi);
        // c - Phi on [lo, z], Phi - c on [z, hi]
        let left = c * (z - lo) - (cdf_primitive(z) - cdf_primitive(lo));
        let right = (cdf_primitive(hi) - cdf_primitive(z)) - c * (hi - z);
        total += left.max(0.0) + right.max(0.0);
    }
    Ok(total)
}

/// `(x - mean) / sd` with the unbiased standard deviation.
pub fn standardize(s: &SampleSet) -> Result<SampleSet> {
    if s.len() < 2 {
        return Err(GeoError::InsufficientData("standardization needs two values".into()));
    }
    let m = s.mean();
    let var = s.variance();
    if !(var > 0.0) {
        return Err(GeoError::InsufficientData("zero variance".into()));
    }
    let sd = var.sqrt();
    SampleSet::new(s.values.iter().map(|v| (v - m) / sd).collect(), s.label.clone())
}

/// Rows of `m`-vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorSampleSet {
    m: usize,
    rows: Vec<Vec<f64>>,
}

impl VectorSampleSet {
    pub fn new(m: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(r) = rows.iter().position(|r| r.len() != m) {
            return Err(GeoError::DimensionMismatch {
                expected: m,
                got: rows[r].len(),
            });
        }
        Ok(VectorSampleSet { m, rows })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

/// Sample covariance with a positive-semidefiniteness report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub matrix: Vec<Vec<f64>>,
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues below the floor `-1e-12 * max(1, |largest|)`. Nothing is
    /// clamped; the count is only reported.
    pub negative_eigenvalues: usize,
    /// Eigenvalues with magnitude below the same floor.
    pub null_eigenvalues: usize,
}

impl CovarianceReport {
    pub fn is_psd(&self) -> bool {
        self.negative_eigenvalues == 0
    }
}

pub fn covariance_matrix(v: &VectorSampleSet) -> Result<CovarianceReport> {
    let n = v.rows.len();
    if n < 2 {
        return Err(GeoError::InsufficientData("covariance needs two rows".into()));
    }
    let m = v.m;
    let means: Vec<f64> = (0..m)
        .map(|j| v.rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let s: f64 = v.rows.iter().map(|r| (r[i] - means[i]) * (r[j] - means[j])).sum();
            let c = s / (n - 1) as f64;
            cov[i][j] = c;
            cov[j][i] = c;
        }
    }
    let mat = DMatrix::from_fn(m, m, |i, j| cov[i][j]);
    let mut eig: Vec<f64> = SymmetricEigen::new(mat).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let floor = 1e-12 * eig.last().map_or(1.0, |l| l.abs().max(1.0));
    Ok(CovarianceReport {
        negative_eigenvalues: eig.iter().filter(|&&e| e < -floor).count(),
        null_eigenvalues: eig.iter().filter(|&&e| e.abs() <= floor).count(),
        eigenvalues: eig,
        matrix: cov,
    })
}

/// Ordinary least squares `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares.
    pub residual: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(GeoError::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(GeoError::InsufficientData("fit needs two points".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(GeoError::InsufficientData("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - residual / syy } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        residual,
        r_squared,
    })
}

/// Fit of `log variance` against `log n`; the slope estimates the growth
/// exponent of the variance.
pub fn variance_scaling_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    if ns.len() < 3 {
        return Err(GeoError::InsufficientData("need at least three distinct scales".into()));
    }
    if let Some(p) = points.iter().find(|p| !(p.1 > 0.0) || !(p.0 > 0.0)) {
        return Err(GeoError::param("variance", format!("nonpositive input at n = {}", p.0)));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    linear_fit(&xs, &ys)
}

/// Bootstrap standard error of a statistic.
pub fn bootstrap_se<F: Fn(&[f64]) -> f64>(values: &[f64], resamples: usize, seed: SeedState, stat: F) -> f64 {
    let mut rng = seed.rng();
    let n = values.len();
    let mut buf = vec![0.0; n];
    let stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = values[rng.random_range(0..n)];
            }
            stat(&buf)
        })
        .collect();
    let m = stats.iter().sum::<f64>() / resamples as f64;
    (stats.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (resamples - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::{covariance_matrix, empirical_dk, empirical_dw, standardize, std_normal_cdf, std_normal_quantile,
        variance_scaling_fit, SampleSet, SeedState, VectorSampleSet};
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};
    use rand::Rng as _;

    fn set(v: &[f64]) -> SampleSet {
        SampleSet::new(v.to_vec(), "t").unwrap()
    }

    fn quantiles(n: usize) -> SampleSet {
        set(&(1..=n).map(|i| std_normal_quantile((i as f64 - 0.5) / n as f64)).collect::<Vec<_>>())
    }

    #[test]
    fn kolmogorov_values() {
        let dk = empirical_dk(&set(&[-1.0, 1.0])).unwrap();
        assert!((dk - (std_normal_cdf(1.0) - 0.5)).abs() < 1e-12);
        assert!((dk - 0.34134).abs() < 1e-5);
        assert_eq!(empirical_dk(&set(&[0.0])).unwrap(), 0.5);
        for n in [10, 1000] {
            assert!((empirical_dk(&quantiles(n)).unwrap() - 0.5 / n as f64).abs() < 1e-12);
        }
        assert!(empirical_dk(&set(&[])).is_err());
    }

    #[test]
    fn wasserstein_values() {
        let dw = empirical_dw(&set(&[0.0])).unwrap();
        assert!((dw - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!(empirical_dw(&quantiles(10_000)).unwrap() < 1e-3);
        let s = set(&[-0.3, 0.2, 1.7, -2.1]);
        let neg = set(&[0.3, -0.2, -1.7, 2.1]);
        assert!((empirical_dw(&s).unwrap() - empirical_dw(&neg).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn wasserstein_matches_numerical_integral() {
        let s = set(&[-0.9, -0.1, 0.4, 0.4, 1.3]);
        let v = s.sorted().unwrap();
        let ecdf = |x: f64| v.iter().filter(|&&y| y <= x).count() as f64 / v.len() as f64;
        let (a, b, m) = (-12.0, 12.0, 2_400_000);
        let h = (b - a) / m as f64;
        let num: f64 = (0..m)
            .map(|k| {
                let x = a + (k as f64 + 0.5) * h;
                (ecdf(x) - std_normal_cdf(x)).abs() * h
            })
            .sum();
        assert!((num - empirical_dw(&s).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn standardization() {
        let z = standardize(&set(&[0.0, 2.0])).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((z.values()[0] + r).abs() < 1e-15 && (z.values()[1] - r).abs() < 1e-15);
        let x = [0.3, 1.9, -2.0, 5.5];
        let ax: Vec<f64> = x.iter().map(|v| 3.0 * v - 7.0).collect();
        let (a, b) = (standardize(&set(&x)).unwrap(), standardize(&set(&ax)).unwrap());
        for (p, q) in a.values().iter().zip(b.values()) {
            assert!((p - q).abs() < 1e-12);
        }
        assert!(standardize(&set(&[1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn covariance_cases() {
        let rows: Vec<Vec<f64>> = [1.0, 2.0, 4.0, 7.0].iter().map(|&x| vec![x, x]).collect();
        let rep = covariance_matrix(&VectorSampleSet::new(2, rows).unwrap()).unwrap();
        assert_eq!(rep.null_eigenvalues, 1);
        assert!(rep.is_psd());
        let rows: Vec<Vec<f64>> = [1.0, 2.0, 4.0, 7.0].iter().map(|&x| vec![x, -x]).collect();
        let rep = covariance_matrix(&VectorSampleSet::new(2, rows).unwrap()).unwrap();
        let s = rep.matrix[0][0];
        assert_eq!(rep.matrix[0][1], -s);
        assert_eq!(rep.matrix[1][1], s);

        let mut rng = SeedState::new(1, 0).rng();
        let n = 100_000;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let rep = covariance_matrix(&VectorSampleSet::new(3, rows).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(rep.matrix[i][j], rep.matrix[j][i]);
                if i != j {
                    assert!(rep.matrix[i][j].abs() < 4.0 / (n as f64).sqrt());
                }
            }
        }
        assert!(covariance_matrix(&VectorSampleSet::new(2, vec![vec![1.0, 2.0]]).unwrap()).is_err());
        assert!(VectorSampleSet::new(2, vec![vec![1.0]]).is_err());
    }

    #[test]
    fn scaling_fits() {
        let pts: Vec<(f64, f64)> = [8.0, 12.0, 16.0, 24.0, 32.0].iter().map(|&n| (n, 7.0 * n * n)).collect();
        let f = variance_scaling_fit(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-9);
        assert!((f.intercept - 7f64.ln()).abs() < 1e-9);
        let flat: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, 3.0)).collect();
        assert!(variance_scaling_fit(&flat).unwrap().slope.abs() < 1e-12);
        let mut rng = SeedState::new(2, 0).rng();
        let noisy: Vec<(f64, f64)> = pts
            .iter()
            .map(|p| (p.0, p.0 * p.0 * (1.0 + 0.01 * rng.random_range(-1.0..1.0))))
            .collect();
        assert!((variance_scaling_fit(&noisy).unwrap().slope - 2.0).abs() < 0.05);
        assert!(variance_scaling_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(variance_scaling_fit(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
    }

    proptest! {
        #[test]
        fn metric_ranges_and_shift(values in prop::collection::vec(-5.0f64..5.0, 1..40), c in -3.0f64..3.0) {
            let s = set(&values);
            let dk = empirical_dk(&s).unwrap();
            prop_assert!((0.0..=1.0).contains(&dk));
            let dw = empirical_dw(&s).unwrap();
            prop_assert!(dw.is_finite() && dw >= 0.0);
            let shifted = set(&values.iter().map(|v| v + c).collect::<Vec<_>>());
            prop_assert!((empirical_dw(&shifted).unwrap() - dw).abs() <= c.abs() + 1e-9);
        }

        #[test]
        fn standardize_idempotent(values in prop::collection::vec(-50.0f64..50.0, 3..30)) {
            let s = set(&values);
            prop_assume!(s.variance() > 1e-6);
            let a = standardize(&s).unwrap();
            let b = standardize(&a).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
