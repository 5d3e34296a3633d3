//! Symmetric matrix helpers: PSD projection, jittered factorisation and a
//! serialisable covariance matrix type.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Jitter levels tried before falling back to an eigendecomposition, as
/// multiples of `trace / dim`.
pub const JITTER_LADDER: [f64; 3] = [1e-12, 1e-10, 1e-8];

/// Symmetric (and, after projection, PSD) covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    entries: DMatrix<f64>,
}

impl CovMatrix {
    /// Accepts a square matrix that is symmetric up to roundoff and stores
    /// its exact symmetrisation.
    pub fn new(mut entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::config("covariance matrix must be square"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("covariance matrix has non-finite entries"));
        }
        let scale = entries.amax().max(1.0);
        let asym = (&entries - entries.transpose()).amax();
        if asym > 1e-9 * scale {
            return Err(Error::numeric(format!("matrix is not symmetric (|A - A'| = {asym:e})")));
        }
        symmetrize(&mut entries);
        Ok(Self { entries })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn scaled(&self, s: f64) -> CovMatrix {
        CovMatrix {
            entries: &self.entries * s,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        sym_eigen(&self.entries).map(|(v, _)| v.min()).unwrap_or(f64::NAN)
    }

    /// Clamps negative eigenvalues to zero.
    pub fn psd_projected(&self) -> CovMatrix {
        CovMatrix {
            entries: psd_project(&self.entries),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CovMatrixRepr {
    dim: usize,
    entries: Vec<Vec<f64>>,
}

impl Serialize for CovMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CovMatrixRepr {
            dim: self.dim(),
            entries: rows(&self.entries),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CovMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = CovMatrixRepr::deserialize(de)?;
        let m = from_rows(repr.dim, &repr.entries).map_err(D::Error::custom)?;
        CovMatrix::new(m).map_err(D::Error::custom)
    }
}

pub(crate) fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::config(format!("expected a {dim} x {dim} matrix")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

/// Eigenvalues and orthonormal eigenvectors (as columns) of a symmetric
/// matrix. Exactly zero rows are split off first: they carry zero
/// eigenvalues with coordinate eigenvectors, and leaving them in can make
/// the QR iteration break down on large sparse kernels.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("eigendecomposition of a non-finite matrix"));
    }
    let active: Vec<usize> = (0..n).filter(|&i| m.row(i).iter().any(|&v| v != 0.0)).collect();
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    if active.is_empty() {
        return Ok((values, DMatrix::identity(n, n)));
    }
    let reduced = DMatrix::from_fn(active.len(), active.len(), |i, j| m[(active[i], active[j])]);
    let eig = SymmetricEigen::new(reduced);
    if eig
        .eigenvalues
        .iter()
        .chain(eig.eigenvectors.iter())
        .any(|v| !v.is_finite())
    {
        return Err(Error::numeric("symmetric eigensolver did not converge"));
    }
    for (c, &v) in eig.eigenvalues.iter().enumerate() {
        values[c] = v;
        for (r, &i) in active.iter().enumerate() {
            vectors[(i, c)] = eig.eigenvectors[(r, c)];
        }
    }
    let mut c = active.len();
    for i in (0..n).filter(|i| !active.contains(i)) {
        vectors[(i, c)] = 1.0;
        c += 1;
    }
    Ok((values, vectors))
}

/// `V f(D) V'` for a symmetric matrix; the result is exactly symmetric.
pub fn spectral_map(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let (values, vectors) = sym_eigen(m)?;
    let mapped = values.map(f);
    let mut out = &vectors * DMatrix::from_diagonal(&mapped) * vectors.transpose();
    symmetrize(&mut out);
    Ok(out)
}

/// Replaces `m` by `(m + m') / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Eigenvalue clamping at zero; the result is exactly symmetric.
pub fn psd_project(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    spectral_map(m, |v| v.max(0.0)).expect("finite symmetric input")
}

/// How a PSD matrix was factorised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorKind {
    /// Cholesky after adding `jitter * trace / dim` to the diagonal.
    Cholesky {
        jitter: f64,
    },
    Eigen,
}

/// `L` with `L L' ~= m`, via the jitter ladder and an eigen fallback.
pub fn factor_psd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, FactorKind)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((m.clone(), FactorKind::Eigen));
    }
    let base = m.trace() / n as f64;
    for &eps in &JITTER_LADDER {
        let mut jittered = m.clone();
        for i in 0..n {
            jittered[(i, i)] += eps * base;
        }
        if let Some(ch) = jittered.cholesky() {
            return Ok((ch.l(), FactorKind::Cholesky { jitter: eps }));
        }
    }
    let l = eigen_factor(m, 0.0)?;
    Ok((l, FactorKind::Eigen))
}

/// Rank-revealing factor `V sqrt(D)` keeping eigenvalues above
/// `rel_tol * max(eigenvalue)`.
pub fn eigen_factor(m: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let (values, vectors) = sym_eigen(m)?;
    let top = values.max().max(0.0);
    let keep: Vec<usize> = (0..n)
        .filter(|&i| values[i] > rel_tol * top && values[i] > 0.0)
        .collect();
    let mut l = DMatrix::zeros(n, keep.len());
    for (col, &i) in keep.iter().enumerate() {
        let s = values[i].sqrt();
        for r in 0..n {
            l[(r, col)] = vectors[(r, i)] * s;
        }
    }
    Ok(l)
}
