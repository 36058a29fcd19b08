//! Compressed-row storage and an envelope (skyline) LDL^T factorization.
//!
//! The factorization does not pivot. Callers must order unknowns so that
//! every leading principal submatrix is nonsingular; for the bordered
//! Neumann system this holds when the constraint row is eliminated just
//! before one boundary node.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Square matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(
                i < n && j < n,
                "triplet ({i}, {j}) out of range for n = {n}"
            );
            if last == Some((i, j)) {
                *values.last_mut().expect("nonempty") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }
}

/// Symmetric matrix in envelope storage: row `i` holds columns
/// `first[i]..=i` contiguously, diagonal last.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl Envelope {
    /// Builds the envelope from the lower triangle (`row >= col`) of a
    /// symmetric matrix; upper-triangle triplets are mirrored.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut first: Vec<usize> = (0..n).collect();
        for &(i, j, _) in triplets {
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            first[r] = first[r].min(c);
        }
        let mut offset = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for (i, &f) in first.iter().enumerate() {
            offset.push(total);
            total += i - f + 1;
        }
        offset.push(total);
        let mut env = Self {
            first,
            offset,
            values: vec![0.0; total],
        };
        for &(i, j, v) in triplets {
            if i >= j {
                *env.entry_mut(i, j) += v;
            }
        }
        env
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Stored entries, a proxy for factorization memory.
    pub fn size(&self) -> usize {
        self.values.len()
    }

    fn entry_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        debug_assert!(j >= self.first[i] && j <= i);
        &mut self.values[self.offset[i] + j - self.first[i]]
    }

    /// In-place `L D L^T` factorization. Fails on a pivot smaller than
    /// `1e-13` times the largest diagonal magnitude.
    pub fn factor(mut self) -> Result<LdlFactor> {
        let n = self.dim();
        let scale = (0..n)
            .map(|i| self.values[self.offset[i + 1] - 1].abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut diag = vec![0.0; n];
        for i in 0..n {
            let fi = self.first[i];
            let oi = self.offset[i];
            // Row i holds g_ik = l_ik d_k until the row is complete.
            for j in fi..i {
                let fj = self.first[j];
                let oj = self.offset[j];
                let k0 = fi.max(fj);
                let (head, tail) = self.values.split_at_mut(oi);
                let row_i = &tail[..i - fi + 1];
                let row_j = &head[oj..oj + (j - fj + 1)];
                let mut s = 0.0;
                for k in k0..j {
                    s += row_i[k - fi] * row_j[k - fj];
                }
                tail[j - fi] -= s;
            }
            let mut d = self.values[oi + i - fi];
            for k in fi..i {
                let g = self.values[oi + k - fi];
                let l = g / diag[k];
                d -= g * l;
                self.values[oi + k - fi] = l;
            }
            if !(d.abs() > 1e-13 * scale) {
                return Err(Error::SingularSystem {
                    index: i,
                    pivot: d,
                    scale,
                    size: n,
                });
            }
            diag[i] = d;
            self.values[oi + i - fi] = 1.0;
        }
        Ok(LdlFactor {
            first: self.first,
            offset: self.offset,
            lower: self.values,
            diag,
        })
    }
}

/// Immutable `L D L^T` factor; `solve` takes `&self` so one factor can
/// serve concurrent right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct LdlFactor {
    first: Vec<usize>,
    offset: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl LdlFactor {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn pivots(&self) -> &[f64] {
        &self.diag
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(rhs.len(), n, "rhs length");
        let mut x = rhs.to_vec();
        // L y = b
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.offset[i]..self.offset[i] + (i - fi)];
            let s: f64 = row.iter().zip(&x[fi..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for (v, d) in x.iter_mut().zip(&self.diag) {
            *v /= d;
        }
        // L^T x = z, column sweep over the stored rows.
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = x[i];
            let row = &self.lower[self.offset[i]..self.offset[i] + (i - fi)];
            for (k, l) in row.iter().enumerate() {
                x[fi + k] -= l * xi;
            }
        }
        x
    }
}
