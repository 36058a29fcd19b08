//! Independent oracles for checking the numerical core: brute-force grid
//! search, eigenvalue bisection for the monotonicity bound, random test
//! matrices and a few summary statistics.

use eit_core::matfun::{matrix_abs, sym_eigenvalues, SymmetricMatrix};
use eit_core::Result;
use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic source of uniform test data.
pub struct TestRng(ChaCha8Rng);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    pub fn matrix(&mut self, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| self.uniform(-1.0, 1.0))
    }

    pub fn symmetric(&mut self, n: usize) -> DMatrix<f64> {
        let m = self.matrix(n);
        (&m + m.transpose()) * 0.5
    }

    /// `G G^T / n + shift I`.
    pub fn positive(&mut self, n: usize, shift: f64) -> DMatrix<f64> {
        let g = self.matrix(n);
        &g * g.transpose() / n as f64 + DMatrix::identity(n, n) * shift
    }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    let values = sym_eigenvalues(&SymmetricMatrix::symmetrize(m)?)?;
    Ok(*values.last().expect("non-empty matrix"))
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    let values = sym_eigenvalues(&SymmetricMatrix::symmetrize(m)?)?;
    Ok(values[0])
}

/// Largest `alpha` with `delta I + |V| - alpha S` positive semidefinite,
/// found by doubling and then bisecting on the smallest eigenvalue.
/// Returns `None` if no finite bound exists below `2^60`.
pub fn bisect_beta(s: &DMatrix<f64>, v: &DMatrix<f64>, delta: f64) -> Result<Option<f64>> {
    let n = v.nrows();
    let base = matrix_abs(&SymmetricMatrix::symmetrize(v)?)?.into_matrix()
        + DMatrix::identity(n, n) * delta;
    let feasible =
        |alpha: f64| -> Result<bool> { Ok(min_eigenvalue(&(&base - s * alpha))? >= 0.0) };
    let (mut lo, mut hi) = (0.0, 1.0);
    while feasible(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 2f64.powi(60) {
            return Ok(None);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Exhaustive minimizer of `||sum_k a_k S_k - V||_F` over the grid
/// `{0, step, 2 step, ...}^3` inside the box `[0, upper]`.
pub fn grid_search_three(
    s: &[DMatrix<f64>; 3],
    v: &DMatrix<f64>,
    upper: [f64; 3],
    step: f64,
) -> [f64; 3] {
    let mut g = [[0.0; 3]; 3];
    let mut c = [0.0; 3];
    for p in 0..3 {
        c[p] = s[p].dot(v);
        for q in 0..3 {
            g[p][q] = s[p].dot(&s[q]);
        }
    }
    let counts = upper.map(|u| (u / step + 1e-9).floor() as usize);
    let mut best = ([0.0; 3], f64::INFINITY);
    for i in 0..=counts[0] {
        let x = i as f64 * step;
        for j in 0..=counts[1] {
            let y = j as f64 * step;
            // f(z) = f0 + f1 z + g22 z^2 for this (x, y).
            let f0 = g[0][0] * x * x + 2.0 * g[0][1] * x * y + g[1][1] * y * y
                - 2.0 * (c[0] * x + c[1] * y);
            let f1 = 2.0 * (g[0][2] * x + g[1][2] * y - c[2]);
            for k in 0..=counts[2] {
                let z = k as f64 * step;
                let f = f0 + z * (f1 + g[2][2] * z);
                if f < best.1 {
                    best = ([x, y, z], f);
                }
            }
        }
    }
    best.0
}

/// `|A ∩ B| / |A ∪ B|`, defined as 1 for two empty sets.
pub fn jaccard(a: &[bool], b: &[bool]) -> f64 {
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count();
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Observed orders `log2(e_i / e_{i+1})` for errors at successively
/// doubled resolutions.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
