//! Dense linear-algebra helpers over `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues below `-NEG_EIG_TOL` (relative to the spectral scale) are
/// rejected; smaller negatives are treated as round-off and clamped to zero.
pub const NEG_EIG_TOL: f64 = 1e-8;

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalizes log-weights into a probability vector.
pub fn softmax_log(log_w: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(log_w);
    log_w.iter().map(|l| (l - lse).exp()).collect()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Principal square root of a symmetric positive semi-definite matrix.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = symmetrize(m).symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut roots = DVector::zeros(eig.eigenvalues.len());
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v < -NEG_EIG_TOL * scale {
            return Err(Error::numerical(format!(
                "matrix is not positive semi-definite (eigenvalue {v:e})"
            )));
        }
        roots[i] = v.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// A factor `L` with `L Lᵀ = m`. Cholesky when `m` is positive definite,
/// otherwise the symmetric square root (covers singular PSD matrices).
pub fn psd_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match m.clone().cholesky() {
        Some(c) => Ok(c.l()),
        None => psd_sqrt(m),
    }
}

/// Multivariate normal log-density with a cached Cholesky factorization.
#[derive(Debug, Clone)]
pub struct GaussianLogPdf {
    mean: DVector<f64>,
    chol_l: DMatrix<f64>,
    log_norm: f64,
}

impl GaussianLogPdf {
    pub fn new(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numerical("covariance is not positive definite"))?;
        let l = chol.l();
        let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let d = mean.len() as f64;
        Ok(Self {
            mean: mean.clone(),
            chol_l: l,
            log_norm: -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + log_det),
        })
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_iterator(x.len(), x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        let z = self
            .chol_l
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        self.log_norm - 0.5 * z.norm_squared()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_handles_large_values() {
        let v = [1e6, 1e6];
        assert!((log_sum_exp(&v) - (1e6 + 2f64.ln())).abs() < 1e-6);
        let w = softmax_log(&[-1e6, -1e6 - 2f64.ln()]);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let r = psd_sqrt(&m).unwrap();
        assert!((&r * &r - &m).abs().max() < 1e-12);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(psd_sqrt(&m).is_err());
    }

    #[test]
    fn factor_of_singular_psd() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let l = psd_factor(&m).unwrap();
        assert!((&l * l.transpose() - &m).abs().max() < 1e-12);
    }

    #[test]
    fn log_pdf_standard_normal() {
        let g = GaussianLogPdf::new(&DVector::zeros(1), &DMatrix::identity(1, 1)).unwrap();
        let expected = -0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5;
        assert!((g.log_pdf(&[1.0]) - expected).abs() < 1e-14);
    }
}
