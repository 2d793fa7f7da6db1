use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, psd_sqrt};

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "rmse: lengths {} and {} differ",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("rmse: empty input"));
    }
    let mse = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64;
    Ok(mse.sqrt())
}

/// Mean and covariance of a Gaussian moment fit.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianSummary {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::invalid("covariance shape does not match the mean"));
        }
        if !is_symmetric(&cov, 1e-10) {
            return Err(Error::invalid("covariance is not symmetric"));
        }
        Ok(Self { mean, cov })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean and unbiased sample covariance.
pub fn fit_gaussian<V: AsRef<[f64]>>(points: &[V]) -> Result<GaussianSummary> {
    if points.len() < 2 {
        return Err(Error::invalid("fit_gaussian needs at least two points"));
    }
    let d = points[0].as_ref().len();
    if points.iter().any(|p| p.as_ref().len() != d) {
        return Err(Error::invalid("fit_gaussian: points have different lengths"));
    }
    let n = points.len() as f64;
    let mut mean = DVector::zeros(d);
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.as_ref()) {
            *m += v;
        }
    }
    mean /= n;
    let mut cov = DMatrix::zeros(d, d);
    let mut diff = vec![0.0; d];
    for p in points {
        for (o, (v, m)) in diff.iter_mut().zip(p.as_ref().iter().zip(mean.iter())) {
            *o = v - m;
        }
        for i in 0..d {
            for j in 0..=i {
                cov[(i, j)] += diff[i] * diff[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / (n - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    GaussianSummary::new(mean, cov)
}

/// Fréchet distance (squared 2-Wasserstein) between two Gaussians:
/// `|m1 - m2|^2 + tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2})`.
pub fn frechet_distance(p: &GaussianSummary, q: &GaussianSummary) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::invalid(format!(
            "frechet_distance: dimensions {} and {} differ",
            p.dim(),
            q.dim()
        )));
    }
    let mean_term = (&p.mean - &q.mean).norm_squared();
    let root_p = psd_sqrt(&p.cov)?;
    let cross = psd_sqrt(&(&root_p * &q.cov * &root_p))?;
    let fd = mean_term + p.cov.trace() + q.cov.trace() - 2.0 * cross.trace();
    Ok(fd.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(mean: &[f64], cov: &[f64]) -> GaussianSummary {
        let d = mean.len();
        GaussianSummary::new(DVector::from_column_slice(mean), DMatrix::from_row_slice(d, d, cov)).unwrap()
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - (12.5f64).sqrt()).abs() < 1e-15);
        assert!(rmse(&[0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn fd_closed_forms() {
        let a = g(&[0.3, -1.0], &[2.0, 0.5, 0.5, 1.0]);
        assert!(frechet_distance(&a, &a).unwrap().abs() < 1e-9);
        // 1-D: (m1 - m2)^2 + (s1 - s2)^2 = 9 + 1
        let fd = frechet_distance(&g(&[0.0], &[1.0]), &g(&[3.0], &[4.0])).unwrap();
        assert!((fd - 10.0).abs() < 1e-9);
        // commuting diagonals: (1 - 2)^2 + (2 - 1)^2
        let fd = frechet_distance(
            &g(&[0.0, 0.0], &[1.0, 0.0, 0.0, 4.0]),
            &g(&[0.0, 0.0], &[4.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        assert!((fd - 2.0).abs() < 1e-9);
    }

    #[test]
    fn fit_two_points() {
        let s = fit_gaussian(&[vec![1.0], vec![-1.0]]).unwrap();
        assert_eq!(s.mean()[0], 0.0);
        assert_eq!(s.cov()[(0, 0)], 2.0);
        let s = fit_gaussian(&vec![vec![2.0, 1.0]; 5]).unwrap();
        assert_eq!(s.cov().abs().max(), 0.0);
        assert!(fit_gaussian(&[vec![1.0]]).is_err());
    }

    #[test]
    fn fit_standard_normal() {
        let mut rng = crate::rng::RngStream::new(21, 0).rng();
        let pts: Vec<Vec<f64>> = (0..100_000).map(|_| rng.gaussian_vec(2)).collect();
        let s = fit_gaussian(&pts).unwrap();
        assert!(s.mean().amax() < 0.02);
        assert!((s.cov() - DMatrix::<f64>::identity(2, 2)).norm() < 0.03);
    }

    fn random_2d() -> impl Strategy<Value = GaussianSummary> {
        (
            proptest::array::uniform2(-3.0f64..3.0),
            proptest::array::uniform4(-1.5f64..1.5),
        )
            .prop_map(|(m, a)| {
                let a = DMatrix::from_row_slice(2, 2, &a);
                let cov = &a * a.transpose() + DMatrix::identity(2, 2) * 0.05;
                GaussianSummary::new(DVector::from_column_slice(&m), cov).unwrap()
            })
    }

    proptest! {
        #[test]
        fn fd_symmetric(p in random_2d(), q in random_2d()) {
            let a = frechet_distance(&p, &q).unwrap();
            let b = frechet_distance(&q, &p).unwrap();
            prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }

        #[test]
        fn w2_triangle(p in random_2d(), q in random_2d(), r in random_2d()) {
            let w = |a: &GaussianSummary, b: &GaussianSummary| frechet_distance(a, b).unwrap().sqrt();
            prop_assert!(w(&p, &r) <= w(&p, &q) + w(&q, &r) + 1e-8);
        }
    }
}
