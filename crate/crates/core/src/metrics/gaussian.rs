//! Gaussian 2-Wasserstein distance and the PSD square root behind it.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{spectral_map, sym_eigen, symmetrize, CovMatrix};

/// Relative size of a negative squared distance still treated as roundoff.
const NEGATIVE_W2_TOL: f64 = 1e-6;

/// Symmetric PSD square root through eigenvalue clamping.
pub fn psd_sqrt(s: &CovMatrix) -> Result<CovMatrix> {
    if s.dim() == 0 {
        return Ok(s.clone());
    }
    CovMatrix::new(spectral_map(s.matrix(), |v| v.max(0.0).sqrt())?)
}

/// Sum of absolute eigenvalues of a symmetric matrix.
pub fn trace_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    sym_eigen(m)
        .map(|(v, _)| v.iter().map(|x| x.abs()).sum())
        .unwrap_or(f64::NAN)
}

/// `W_2(N(0, S1), N(0, S2)) = sqrt(tr S1 + tr S2 - 2 tr (S1^1/2 S2 S1^1/2)^1/2)`.
pub fn wasserstein2_gaussian(s1: &CovMatrix, s2: &CovMatrix) -> Result<f64> {
    if s1.dim() != s2.dim() {
        return Err(Error::config(format!(
            "covariance dimensions differ: {} vs {}",
            s1.dim(),
            s2.dim()
        )));
    }
    let r1 = psd_sqrt(s1)?;
    let mut cross = r1.matrix() * s2.matrix() * r1.matrix();
    symmetrize(&mut cross);
    let cross = CovMatrix::new(cross)?;
    let t = s1.trace() + s2.trace();
    let squared = t - 2.0 * psd_sqrt(&cross)?.trace();
    if squared < -NEGATIVE_W2_TOL * t.max(f64::MIN_POSITIVE) {
        return Err(Error::numeric(format!("negative squared W2 distance {squared:e}")));
    }
    Ok(squared.max(0.0).sqrt())
}

/// Covariance of centred samples with divisor `n`; rows are samples.
pub fn empirical_cov(samples: &[Vec<f64>]) -> Result<CovMatrix> {
    let Some(first) = samples.first() else {
        return Err(Error::Empty("no samples"));
    };
    let q = first.len();
    if samples.iter().any(|s| s.len() != q) {
        return Err(Error::config("samples must share one dimension"));
    }
    let n = samples.len() as f64;
    let mut mean = vec![0.0; q];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v / n;
        }
    }
    let mut c = DMatrix::zeros(q, q);
    for s in samples {
        for i in 0..q {
            let a = s[i] - mean[i];
            for j in 0..=i {
                c[(i, j)] += a * (s[j] - mean[j]) / n;
            }
        }
    }
    for i in 0..q {
        for j in 0..i {
            c[(j, i)] = c[(i, j)];
        }
    }
    CovMatrix::new(c)
}
