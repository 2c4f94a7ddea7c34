//! Compressed sparse row matrices and the operator trait used by the
//! Krylov solvers.

use nalgebra::DMatrix;
use rayon::prelude::*;

/// A square or rectangular linear map applied to dense vectors.
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Rows below this count are multiplied sequentially.
const PAR_ROWS: usize = 2048;

/// Relative drop tolerance applied when finalising assembled matrices.
pub const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            offsets: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Sums duplicate triplets and drops entries with magnitude at most
    /// `drop_tol` times the largest magnitude in their row. Duplicates are
    /// summed in input order, so the result is reproducible.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
        drop_tol: f64,
    ) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut offsets = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut k = 0;
        for i in 0..nrows {
            let row_start = indices.len();
            while k < triplets.len() && triplets[k].0 == i {
                let j = triplets[k].1;
                assert!(j < ncols, "column {j} out of range");
                let mut v = 0.0;
                while k < triplets.len() && triplets[k].0 == i && triplets[k].1 == j {
                    v += triplets[k].2;
                    k += 1;
                }
                indices.push(j);
                values.push(v);
            }
            let rowmax = values[row_start..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let cut = drop_tol * rowmax;
            let mut w = row_start;
            for r in row_start..indices.len() {
                if values[r] != 0.0 && values[r].abs() > cut {
                    indices[w] = indices[r];
                    values[w] = values[r];
                    w += 1;
                }
            }
            indices.truncate(w);
            values.truncate(w);
            offsets[i + 1] = indices.len();
        }
        assert!(k == triplets.len(), "row index out of range");
        Self {
            nrows,
            ncols,
            offsets,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Mutable reference to a stored entry.
    pub fn get_mut(&mut self, i: usize, j: usize) -> Option<&mut f64> {
        let r = self.offsets[i]..self.offsets[i + 1];
        let k = self.indices[r.clone()].binary_search(&j).ok()?;
        Some(&mut self.values[r.start + k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, t, 0.0)
    }

    /// `self + alpha * other` on the union of both sparsity patterns.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut offsets = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut a, mut b) = (0, 0);
            while a < ca.len() || b < cb.len() {
                let ja = ca.get(a).copied().unwrap_or(usize::MAX);
                let jb = cb.get(b).copied().unwrap_or(usize::MAX);
                if ja == jb {
                    indices.push(ja);
                    values.push(va[a] + alpha * vb[b]);
                    a += 1;
                    b += 1;
                } else if ja < jb {
                    indices.push(ja);
                    values.push(va[a]);
                    a += 1;
                } else {
                    indices.push(jb);
                    values.push(alpha * vb[b]);
                    b += 1;
                }
            }
            offsets[i + 1] = indices.len();
        }
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            offsets,
            indices,
            values,
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |self − other| over the union of both patterns.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        self.add_scaled(-1.0, other).max_abs()
    }

    /// max |A − Aᵀ|.
    pub fn symmetry_defect(&self) -> f64 {
        self.max_abs_diff(&self.transpose())
    }

    /// Dense copy of the submatrix with the given rows and columns.
    pub fn dense_block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(rows.len(), cols.len());
        for (bi, &i) in rows.iter().enumerate() {
            let (c, v) = self.row(i);
            for (bj, &j) in cols.iter().enumerate() {
                if let Ok(k) = c.binary_search(&j) {
                    m[(bi, bj)] = v[k];
                }
            }
        }
        m
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let t = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j, m[(i, j)])))
            .filter(|t| t.2 != 0.0)
            .collect();
        Self::from_triplets(m.nrows(), m.ncols(), t, 0.0)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.apply(x, &mut y);
        y
    }
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        let row = |i: usize| -> f64 {
            let r = self.offsets[i]..self.offsets[i + 1];
            self.indices[r.clone()]
                .iter()
                .zip(&self.values[r])
                .map(|(&j, &v)| v * x[j])
                .sum()
        };
        if self.nrows < PAR_ROWS {
            y.iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        } else {
            y.par_iter_mut()
                .with_min_len(256)
                .enumerate()
                .for_each(|(i, yi)| *yi = row(i));
        }
    }
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..self.ncols()).map(|j| self[(i, j)] * x[j]).sum();
        }
    }
}

/// Diagonal operator.
#[derive(Debug, Clone)]
pub struct Diagonal(pub Vec<f64>);

impl LinearOperator for Diagonal {
    fn nrows(&self) -> usize {
        self.0.len()
    }

    fn ncols(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((y, x), d) in y.iter_mut().zip(x).zip(&self.0) {
            *y = d * x;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}
