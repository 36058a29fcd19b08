//! Functions of real symmetric matrices.
//!
//! Everything goes through a full eigendecomposition `M = Q diag(l) Q^T`
//! with eigenvalues sorted in descending order.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`SymmetricMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative threshold below which negative eigenvalues of a PSD input are clamped.
pub const PSD_CLAMP: f64 = 1e-12;

/// A square matrix with `||M - M^T||_F <= 1e-12 ||M||_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = (&m - m.transpose()).norm();
        if asym > SYMMETRY_TOL * m.norm() {
            return Err(Error::Domain(format!(
                "matrix is not symmetric: ||M - M^T||_F = {asym:e}"
            )));
        }
        Ok(Self(m))
    }

    /// `(M + M^T) / 2`.
    pub fn symmetrize(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(
                "cannot symmetrize a non-square matrix".into(),
            ));
        }
        Ok(Self((m + m.transpose()) * 0.5))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

impl AsRef<DMatrix<f64>> for SymmetricMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Eigenpairs with `values[0] >= values[1] >= ...`; column `i` of
/// `vectors` belongs to `values[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    /// `Q f(diag(l)) Q^T`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> SymmetricMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &l) in self.values.iter().enumerate() {
            let fl = f(l);
            scaled.column_mut(k).scale_mut(fl);
        }
        let m = &scaled * self.vectors.transpose();
        // Exact symmetry despite rounding in the product.
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        SymmetricMatrix(out)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

pub fn sym_eig(m: &SymmetricMatrix) -> Result<Eigen> {
    let n = m.dim();
    if n == 0 {
        return Ok(Eigen {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let fail = || Error::EigenFailure {
        size: n,
        norm: m.frobenius_norm(),
    };
    if m.0.iter().any(|v| !v.is_finite()) {
        return Err(fail());
    }
    let eig = SymmetricEigen::try_new(m.0.clone(), f64::EPSILON, 0).ok_or_else(fail)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(fail());
    }
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only, descending.
pub fn sym_eigenvalues(m: &SymmetricMatrix) -> Result<Vec<f64>> {
    Ok(sym_eig(m)?.values)
}

/// Largest `|lambda|`, the spectral norm of a symmetric matrix.
pub fn spectral_norm(m: &SymmetricMatrix) -> Result<f64> {
    let e = sym_eig(m)?;
    Ok(e.max().abs().max(e.min().abs()))
}

/// `|M| = sqrt(M^T M)`.
pub fn matrix_abs(m: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    Ok(sym_eig(m)?.map(f64::abs))
}

/// The unique PSD pair with `M = M+ - M-` and `M+ M- = 0`.
pub fn positive_decomposition(m: &SymmetricMatrix) -> Result<(SymmetricMatrix, SymmetricMatrix)> {
    let e = sym_eig(m)?;
    Ok((e.map(|l| l.max(0.0)), e.map(|l| (-l).max(0.0))))
}

/// Positive square root of a PSD matrix. Eigenvalues down to
/// `-1e-12 ||M||_2` are treated as zero.
pub fn matrix_sqrt(m: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let e = sym_eig(m)?;
    let norm = e.max().abs().max(e.min().abs());
    if e.min() < -PSD_CLAMP * norm {
        return Err(Error::Domain(format!(
            "matrix square root needs a PSD input; smallest eigenvalue {:e}",
            e.min()
        )));
    }
    Ok(e.map(|l| l.max(0.0).sqrt()))
}

/// Lower-triangular `L` with positive diagonal and `M = L L^T`.
pub fn cholesky(m: &SymmetricMatrix) -> Result<DMatrix<f64>> {
    let n = m.dim();
    let a = &m.0;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L X = B` for lower-triangular `L`, in place on a copy of `B`.
pub fn forward_substitute(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..x.ncols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}
