//! Measurement and sensitivity matrices for the trigonometric current basis.
//!
//! With orthonormal boundary currents `g_1..g_N`:
//!
//! * `V_ij = <g_i, (Lambda(1) - Lambda(sigma)) g_j> = int_{boundary} g_i d_j`,
//! * `(S_k)_ij = int_{P_k} grad u0_i . grad u0_j`.

use std::io::{self, BufRead, Write};

use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{
    boundary_inner_product, difference_load, energy_inner_product, potential_gradient, CurrentKind,
    DifferenceSolver, Mesh,
};
use crate::geometry::Pixel;

/// `N = 2 N1` currents `sin(j phi)/sqrt(pi)`, `cos(j phi)/sqrt(pi)`,
/// ordered `(1, sin), (1, cos), (2, sin), ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurrentBasis {
    n1: usize,
    ordering: Vec<(usize, CurrentKind)>,
}

impl CurrentBasis {
    pub fn new(n1: usize) -> Result<Self> {
        if n1 == 0 {
            return Err(Error::Config("N1 must be >= 1".into()));
        }
        let ordering = (1..=n1)
            .flat_map(|j| [(j, CurrentKind::Sine), (j, CurrentKind::Cosine)])
            .collect();
        Ok(Self { n1, ordering })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    /// Number of currents `N`.
    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }

    pub fn ordering(&self) -> &[(usize, CurrentKind)] {
        &self.ordering
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    pub entries: DMatrix<f64>,
    /// Absolute noise level `delta` (0 for simulated exact data).
    pub noise_level: f64,
    pub seed: Option<u64>,
}

impl MeasurementMatrix {
    pub fn exact(entries: DMatrix<f64>) -> Self {
        Self {
            entries,
            noise_level: 0.0,
            seed: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    pub pixel_id: usize,
    pub entries: DMatrix<f64>,
}

/// All difference solutions for a basis, sharing one factorization.
pub fn solve_basis(mesh: &Mesh, basis: &CurrentBasis) -> Result<Vec<crate::fem::FemSolution>> {
    let solver = DifferenceSolver::new(mesh)?;
    basis
        .ordering()
        .par_iter()
        .map(|&(j, kind)| solver.solve(j, kind))
        .collect()
}

/// `V_ij = <g_i, d_j>` before symmetrization, in the energy form
/// (see [`energy_inner_product`]), which is symmetric to rounding.
pub fn assemble_v_unsymmetrized(mesh: &Mesh, basis: &CurrentBasis) -> Result<DMatrix<f64>> {
    let sols = solve_basis(mesh, basis)?;
    let loads: Vec<Vec<f64>> = basis
        .ordering()
        .par_iter()
        .map(|&(i, kind)| difference_load(mesh, i, kind))
        .collect();
    let n = basis.len();
    let columns: Vec<Vec<f64>> = sols
        .par_iter()
        .map(|sol| {
            basis
                .ordering()
                .iter()
                .zip(&loads)
                .map(|(&(i, kind), load)| energy_inner_product(mesh, sol, load, i, kind))
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(n, n, |row, col| columns[col][row]))
}

/// `V_ij = int_{boundary} g_i d_j` by boundary quadrature. Agrees with
/// [`assemble_v_unsymmetrized`] up to discretization error; used as a
/// cross-check.
pub fn assemble_v_boundary(mesh: &Mesh, basis: &CurrentBasis) -> Result<DMatrix<f64>> {
    let sols = solve_basis(mesh, basis)?;
    let n = basis.len();
    let mut v = DMatrix::zeros(n, n);
    for (col, sol) in sols.iter().enumerate() {
        for (row, &(i, kind)) in basis.ordering().iter().enumerate() {
            v[(row, col)] = boundary_inner_product(mesh, sol, i, kind);
        }
    }
    Ok(v)
}

/// Exact (noise-free) measurement matrix, symmetrized as `(V + V^T)/2`.
pub fn assemble_v(mesh: &Mesh, basis: &CurrentBasis) -> Result<MeasurementMatrix> {
    let v = assemble_v_unsymmetrized(mesh, basis)?;
    Ok(MeasurementMatrix::exact((&v + v.transpose()) * 0.5))
}

/// Eigenvalue of `Lambda(sigma)` for a concentric inclusion of radius `rho`
/// and conductivity `sigma1` in a unit-conductivity disk, for both currents
/// of order `j`:
///
/// `lambda_j = (1/j) (1 + mu rho^(2j)) / (1 - mu rho^(2j))`,
/// `mu = (1 - sigma1) / (1 + sigma1)`.
///
/// Derived by separation of variables: `u = A r^j` inside and
/// `u = B r^j + C r^-j` outside with continuity of `u` and `sigma du/dr`.
pub fn analytic_concentric(rho: f64, sigma1: f64, j: usize) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!(
            "radius must lie in (0, 1), got {rho}"
        )));
    }
    if !(sigma1 > 0.0 && sigma1.is_finite()) {
        return Err(Error::Domain(format!(
            "inclusion conductivity must be positive, got {sigma1}"
        )));
    }
    if j == 0 {
        return Err(Error::Domain("current order j must be >= 1".into()));
    }
    let mu = (1.0 - sigma1) / (1.0 + sigma1);
    let q = mu * rho.powi(2 * j as i32);
    Ok((1.0 + q) / ((1.0 - q) * j as f64))
}

/// `(S_k)_ij = int_{pixel} grad u0_i . grad u0_j` with the pixel's clipped
/// sub-grid quadrature. Nodes are summed in stored order; the upper triangle
/// is mirrored so the result is exactly symmetric.
pub fn assemble_sk(pixel: &Pixel, basis: &CurrentBasis) -> Result<SensitivityMatrix> {
    if !(pixel.area > 0.0) || pixel.quadrature.is_empty() {
        return Err(Error::Domain(format!("pixel {} has zero area", pixel.id)));
    }
    let n = basis.len();
    let mut s = DMatrix::zeros(n, n);
    let mut grads = vec![nalgebra::Vector2::zeros(); n];
    for node in &pixel.quadrature {
        for (g, &(j, kind)) in grads.iter_mut().zip(basis.ordering()) {
            *g = potential_gradient(j, kind, &node.point);
        }
        for i in 0..n {
            let gi = grads[i] * node.weight;
            for j in i..n {
                s[(i, j)] += gi.dot(&grads[j]);
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            s[(i, j)] = s[(j, i)];
        }
    }
    Ok(SensitivityMatrix {
        pixel_id: pixel.id,
        entries: s,
    })
}

/// Sensitivity matrices for many pixels, in pixel order.
pub fn assemble_all_sk(pixels: &[Pixel], basis: &CurrentBasis) -> Result<Vec<SensitivityMatrix>> {
    pixels.par_iter().map(|p| assemble_sk(p, basis)).collect()
}

/// Uniform `[-1, 1)` noise matrix from ChaCha8 seeded with
/// `seed_from_u64(seed)`, filled row by row; each entry is
/// `2 (u >> 11) / 2^53 - 1` for the next 64-bit output `u`.
pub fn noise_matrix(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            e[(i, j)] = 2.0 * u - 1.0;
        }
    }
    e
}

/// `V + E delta / ||E||_F` with `delta = delta_rel ||V||_F`, before
/// symmetrization.
pub fn perturb(v: &MeasurementMatrix, delta_rel: f64, seed: u64) -> Result<(DMatrix<f64>, f64)> {
    if !(delta_rel >= 0.0 && delta_rel.is_finite()) {
        return Err(Error::Domain(format!(
            "relative noise must be finite and >= 0, got {delta_rel}"
        )));
    }
    let delta_abs = delta_rel * v.frobenius_norm();
    if delta_abs == 0.0 {
        return Ok((v.entries.clone(), 0.0));
    }
    let e = noise_matrix(v.dim(), seed);
    let norm = e.norm();
    Ok((&v.entries + e * (delta_abs / norm), delta_abs))
}

/// Noisy, symmetrized data `V^delta`; `noise_level` records the absolute delta.
pub fn add_noise(v: &MeasurementMatrix, delta_rel: f64, seed: u64) -> Result<MeasurementMatrix> {
    let (p, delta_abs) = perturb(v, delta_rel, seed)?;
    if delta_abs == 0.0 {
        return Ok(MeasurementMatrix {
            entries: v.entries.clone(),
            noise_level: 0.0,
            seed: Some(seed),
        });
    }
    Ok(MeasurementMatrix {
        entries: (&p + p.transpose()) * 0.5,
        noise_level: delta_abs,
        seed: Some(seed),
    })
}

/// Writes `N` on the first line, then `N` rows of `N` values with 17
/// significant digits.
pub fn write_matrix<W: Write>(mut w: W, m: &DMatrix<f64>) -> io::Result<()> {
    writeln!(w, "{}", m.nrows())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:.16e}", m[(i, j)]))
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix<R: BufRead>(r: R) -> io::Result<DMatrix<f64>> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut lines = r.lines();
    let n: usize = lines
        .next()
        .ok_or_else(|| bad("empty matrix file".into()))??
        .trim()
        .parse()
        .map_err(|e| bad(format!("bad dimension: {e}")))?;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| bad(format!("missing row {i}")))??;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| bad(format!("row {i}: {e}"))))
            .collect::<io::Result<_>>()?;
        if vals.len() != n {
            return Err(bad(format!(
                "row {i} has {} values, expected {n}",
                vals.len()
            )));
        }
        for (j, v) in vals.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}
