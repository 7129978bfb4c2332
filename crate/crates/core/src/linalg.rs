//! Small dense linear algebra kernel.
//!
//! Everything here works on row-major `f64` matrices of desk-scale size
//! (up to a few hundred rows). The routines are the ones the pipelines need:
//! cyclic Jacobi eigendecomposition for symmetric matrices, Cholesky,
//! partially pivoted LU solves, complete-pivoting elimination (rank, kernel
//! vectors, rank factorizations) and Gram–Schmidt with reorthogonalization.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Index, IndexMut};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Mat::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from rows; panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat { rows: nrows, cols: ncols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Outer product `w wᵀ`.
    pub fn outer(w: &[f64]) -> Self {
        Mat::from_fn(w.len(), w.len(), |i, j| w[i] * w[j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(l);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    pub fn scaled(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        self.add(&other.scaled(-1.0))
    }

    /// `self += s * w wᵀ`.
    pub fn add_outer(&mut self, s: f64, w: &[f64]) {
        assert!(self.is_square() && self.rows == w.len());
        for i in 0..self.rows {
            let si = s * w[i];
            for j in 0..self.cols {
                self.data[i * self.cols + j] += si * w[j];
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius inner product `Σ a_ij b_ij`.
    pub fn frobenius_dot(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        dot(&self.data, &other.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn symmetrize(&mut self) {
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

// Matrices travel as nested row-major arrays.
impl Serialize for Mat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len()) {
                return Err(serde::de::Error::custom("ragged matrix rows"));
            }
        }
        Ok(Mat::from_rows(&rows))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, matching `values`.
    pub vectors: Mat,
}

impl SymEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Rebuilds `Q f(Λ) Qᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Mat {
        let n = self.values.len();
        let mut out = Mat::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let fl = f(lam);
            if fl == 0.0 {
                continue;
            }
            for i in 0..n {
                let qi = self.vectors[(i, k)] * fl;
                for j in 0..n {
                    out[(i, j)] += qi * self.vectors[(j, k)];
                }
            }
        }
        out
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Only the upper triangle is trusted; the input is symmetrized first.
pub fn sym_eigen(a: &Mat) -> SymEigen {
    assert!(a.is_square(), "eigendecomposition needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    let mut v = Mat::identity(n);
    let scale = m.frobenius_norm();
    if n > 1 && scale > 0.0 {
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[(p, q)] * m[(p, q)];
                }
            }
            if off.sqrt() <= 1e-16 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |i, k| v[(i, order[k])]);
    SymEigen { values, vectors }
}

pub fn min_eigenvalue(a: &Mat) -> f64 {
    if a.rows() == 0 {
        return 0.0;
    }
    sym_eigen(a).min()
}

/// Principal square root of a symmetric positive semidefinite matrix.
/// Negative eigenvalues (round-off) are clamped to zero.
pub fn sym_sqrt(a: &Mat) -> Mat {
    sym_eigen(a).map(|l| l.max(0.0).sqrt())
}

/// Lower-triangular Cholesky factor; `None` unless the matrix is
/// numerically positive definite.
pub fn cholesky(a: &Mat) -> Option<Mat> {
    assert!(a.is_square());
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor `L`.
pub fn cholesky_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    y
}

pub fn cholesky_inverse(l: &Mat) -> Mat {
    let n = l.rows();
    let mut inv = Mat::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = cholesky_solve(l, &e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    inv.symmetrize();
    inv
}

/// Gaussian elimination with partial pivoting. Returns `None` when a pivot
/// falls below `1e-14` times the largest entry.
pub fn lu_solve(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    assert!(a.is_square() && a.rows() == b.len());
    let n = a.rows();
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.max_abs();
    if n == 0 {
        return Some(x);
    }
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))?;
        if m[(piv, col)].abs() <= 1e-14 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                let t = m[(col, k)];
                m[(col, k)] = m[(piv, k)];
                m[(piv, k)] = t;
            }
            x.swap(col, piv);
        }
        let p = m[(col, col)];
        for i in (col + 1)..n {
            let f = m[(i, col)] / p;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[(i, k)] -= f * m[(col, k)];
            }
            x[i] -= f * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= m[(i, k)] * x[k];
        }
        x[i] = s / m[(i, i)];
    }
    Some(x)
}

/// Result of Gaussian elimination with complete pivoting, `P A Q = L U`.
#[derive(Clone, Debug)]
pub struct Elimination {
    /// Numerical rank.
    pub rank: usize,
    /// `rows × rank`, in the original row order (so `A ≈ left · right`).
    pub left: Mat,
    /// `rank × cols`, in the original column order.
    pub right: Mat,
    /// Original column index of each pivot, in pivot order.
    pub pivot_cols: Vec<usize>,
}

/// Complete-pivoting elimination, stopping once every remaining entry is
/// at most `rel_tol` times the largest entry of `a`.
pub fn eliminate(a: &Mat, rel_tol: f64) -> Elimination {
    let (m, n) = (a.rows(), a.cols());
    let scale = a.max_abs();
    let mut work = a.clone();
    let mut row_perm: Vec<usize> = (0..m).collect();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    let limit = m.min(n);
    while rank < limit {
        let (mut bi, mut bj, mut best) = (rank, rank, -1.0);
        for i in rank..m {
            for j in rank..n {
                let v = work[(i, j)].abs();
                if v > best {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        if scale == 0.0 || best <= rel_tol * scale {
            break;
        }
        if bi != rank {
            for k in 0..n {
                let t = work[(rank, k)];
                work[(rank, k)] = work[(bi, k)];
                work[(bi, k)] = t;
            }
            row_perm.swap(rank, bi);
        }
        if bj != rank {
            for k in 0..m {
                let t = work[(k, rank)];
                work[(k, rank)] = work[(k, bj)];
                work[(k, bj)] = t;
            }
            col_perm.swap(rank, bj);
        }
        let p = work[(rank, rank)];
        for i in (rank + 1)..m {
            let f = work[(i, rank)] / p;
            work[(i, rank)] = f;
            if f == 0.0 {
                continue;
            }
            for k in (rank + 1)..n {
                work[(i, k)] -= f * work[(rank, k)];
            }
        }
        rank += 1;
    }
    let mut left = Mat::zeros(m, rank);
    let mut right = Mat::zeros(rank, n);
    for (pi, &orig_row) in row_perm.iter().enumerate() {
        for c in 0..rank.min(pi + 1) {
            left[(orig_row, c)] = if c == pi { 1.0 } else { work[(pi, c)] };
        }
    }
    for r in 0..rank {
        for (pj, &orig_col) in col_perm.iter().enumerate() {
            if pj >= r {
                right[(r, orig_col)] = work[(r, pj)];
            }
        }
    }
    Elimination { rank, left, right, pivot_cols: col_perm[..rank].to_vec() }
}

pub fn numerical_rank(a: &Mat, rel_tol: f64) -> usize {
    eliminate(a, rel_tol).rank
}

/// A nonzero kernel vector of `a` found by column-pivoted reduction to
/// echelon form, or `None` when the columns are independent at `rel_tol`
/// (relative to the largest column norm).
pub fn kernel_vector(a: &Mat, rel_tol: f64) -> Option<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    let col_scale = (0..n).map(|j| norm(&a.column(j))).fold(0.0, f64::max);
    if col_scale == 0.0 {
        return if n > 0 {
            let mut v = vec![0.0; n];
            v[0] = 1.0;
            Some(v)
        } else {
            None
        };
    }
    let thresh = rel_tol * col_scale;
    let mut work = a.clone();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; n];
    let mut row = 0;
    while row < m {
        // pick the remaining column with the largest residual norm
        let mut best = None;
        let mut best_norm = thresh;
        for j in 0..n {
            if used[j] {
                continue;
            }
            let cn = (row..m).map(|i| work[(i, j)] * work[(i, j)]).sum::<f64>().sqrt();
            if cn > best_norm {
                best_norm = cn;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        let piv = (row..m).max_by(|&x, &y| work[(x, j)].abs().total_cmp(&work[(y, j)].abs())).unwrap();
        if piv != row {
            for k in 0..n {
                let t = work[(row, k)];
                work[(row, k)] = work[(piv, k)];
                work[(piv, k)] = t;
            }
        }
        let p = work[(row, j)];
        for k in 0..n {
            work[(row, k)] /= p;
        }
        for i in 0..m {
            if i == row {
                continue;
            }
            let f = work[(i, j)];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                work[(i, k)] -= f * work[(row, k)];
            }
        }
        used[j] = true;
        pivots.push((row, j));
        row += 1;
    }
    let free = (0..n).find(|&j| !used[j])?;
    let mut v = vec![0.0; n];
    v[free] = 1.0;
    for &(r, j) in &pivots {
        v[j] = -work[(r, free)];
    }
    Some(v)
}

/// Orthonormal basis of the span of `vectors` by modified Gram–Schmidt
/// with one reorthogonalization pass. A vector contributes a new basis
/// direction only if its residual exceeds `rel_drop` times its own norm.
pub fn orthonormal_basis(vectors: &[Vec<f64>], rel_drop: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        extend_basis(&mut basis, v, rel_drop);
    }
    basis
}

/// Adds the normalized residual of `v` to `basis` when it is significant.
/// Returns whether the basis grew.
pub fn extend_basis(basis: &mut Vec<Vec<f64>>, v: &[f64], rel_drop: f64) -> bool {
    let vn = norm(v);
    if vn == 0.0 {
        return false;
    }
    let mut w = v.to_vec();
    for _pass in 0..2 {
        for q in basis.iter() {
            let c = dot(q, &w);
            axpy(-c, q, &mut w);
        }
    }
    let wn = norm(&w);
    if wn > rel_drop * vn {
        w.iter_mut().for_each(|x| *x /= wn);
        basis.push(w);
        true
    } else {
        false
    }
}

/// Orthonormal basis of the orthogonal complement of `span(basis)` in
/// `R^dim`; `basis` must already be orthonormal.
pub fn orthogonal_complement(basis: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut full = basis.to_vec();
    let mut comp = Vec::new();
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        if extend_basis(&mut full, &e, 1e-8) {
            comp.push(full.last().unwrap().clone());
        }
        if full.len() == dim {
            break;
        }
    }
    comp
}
