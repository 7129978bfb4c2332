//! Positive semidefinite rank constructions.
//!
//! Everything here is an explicit upper-bound construction:
//!
//! * a rank factorization `a_ij = ⟨u_i, v_j⟩` transformed by a polynomial `p`
//!   becomes a rank factorization of `p(a_ij)` of inner dimension `C(n+k, k)`
//!   by concatenating scaled symmetric tensor powers;
//! * squaring a rank factorization entrywise yields a psd factorization
//!   `⟨u uᵀ, v vᵀ⟩ = ⟨u, v⟩²` with the same side length;
//! * a nonnegative matrix with few distinct values is the entrywise square of
//!   `√a_ij`, which a low-degree interpolating polynomial reproduces exactly;
//! * a matrix with entries in `[0, 1]` is approximated within `ε` by squaring
//!   a uniform polynomial approximation of `√t`.

use crate::linalg::{self, Mat};
use crate::tensor::{self, SizingError, SymBasis};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Default cap on the degree searched by [`sqrt_uniform_approx`].
pub const DEFAULT_DEGREE_CAP: usize = 400;
/// Number of points of the certification grid on `[0, 1]`.
pub const SQRT_GRID_POINTS: usize = 100_000;
/// Relative threshold for numerical rank in dense factorizations.
pub const RANK_TOL: f64 = 1e-10;
/// Absolute tolerance for merging matrix entries into one distinct value.
pub const VALUE_MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PsdRankError {
    #[error("interpolation nodes {a} and {b} are too close")]
    NodesTooClose { a: f64, b: f64 },
    #[error("no polynomial of degree ≤ {cap} approximates √t within {target:.3e} (best {best:.3e})")]
    DegreeCapExceeded { cap: usize, target: f64, best: f64 },
    #[error("entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("entry ({row}, {col}) = {value} lies outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("factorization residual {residual:.3e} exceeds {limit:.3e}")]
    ResidualTooLarge { residual: f64, limit: f64 },
    #[error("eps must lie in (0, 1), got {0}")]
    InvalidEps(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Sizing(#[from] SizingError),
}

/// A real polynomial `Σ α_m t^m` in the monomial basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Polynomial {
    fn from(coeffs: Vec<f64>) -> Self {
        Polynomial::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    /// Trailing zero coefficients are dropped.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }
}

pub fn lagrange_interpolate(nodes: &[f64], values: &[f64]) -> Result<Polynomial, PsdRankError> {
    if nodes.len() != values.len() {
        return Err(PsdRankError::Shape("one value per node required".into()));
    }
    let n = nodes.len();
    if n == 0 {
        return Ok(Polynomial::zero());
    }
    let lo = nodes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_gap = 1e-12 * (hi - lo);
    for i in 0..n {
        for j in (i + 1)..n {
            if (nodes[i] - nodes[j]).abs() <= min_gap {
                return Err(PsdRankError::NodesTooClose { a: nodes[i], b: nodes[j] });
            }
        }
    }
    // Newton divided differences, then expand the nested form
    let mut dd = values.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (nodes[i] - nodes[i - level]);
        }
    }
    let mut coeffs = vec![dd[n - 1]];
    for i in (0..n - 1).rev() {
        // coeffs ← coeffs · (t - x_i) + dd_i
        let mut next = vec![0.0; coeffs.len() + 1];
        for (m, &c) in coeffs.iter().enumerate() {
            next[m + 1] += c;
            next[m] -= c * nodes[i];
        }
        next[0] += dd[i];
        coeffs = next;
    }
    Ok(Polynomial::new(coeffs))
}

/// A polynomial approximation of `√t` on `[0, 1]` with its measured error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqrtApprox {
    pub poly: Polynomial,
    pub degree: usize,
    /// `max |√t - p(t)|` over the certification grid.
    pub sup_error: f64,
    /// Degrees fitted by the search, in the order tried.
    pub degrees_tried: Vec<usize>,
}

/// Uniform certification grid on `[0, 1]`, endpoints included.
pub fn sqrt_grid() -> Vec<f64> {
    let n = SQRT_GRID_POINTS;
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

pub fn grid_sup_error(p: &Polynomial, grid: &[f64]) -> f64 {
    grid.iter().map(|&t| (t.sqrt() - p.eval(t)).abs()).fold(0.0, f64::max)
}

pub fn sqrt_uniform_approx(eps: f64) -> Result<SqrtApprox, PsdRankError> {
    sqrt_uniform_approx_with(eps, DEFAULT_DEGREE_CAP)
}

/// Smallest degree (among those tried) whose minimax fit of `√t` has grid
/// error at most `eps / 3`. Degrees double from 1 until one passes, then a
/// binary search narrows to the smallest passing degree.
pub fn sqrt_uniform_approx_with(eps: f64, cap: usize) -> Result<SqrtApprox, PsdRankError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(PsdRankError::InvalidEps(eps));
    }
    let target = eps / 3.0;
    let grid = sqrt_grid();
    let mut fits: BTreeMap<usize, (Polynomial, f64)> = BTreeMap::new();
    let mut tried = Vec::new();
    let mut fit = |deg: usize, tried: &mut Vec<usize>| -> f64 {
        if let Some((_, e)) = fits.get(&deg) {
            return *e;
        }
        let p = minimax_sqrt(deg, &grid);
        let e = grid_sup_error(&p, &grid);
        fits.insert(deg, (p, e));
        tried.push(deg);
        e
    };

    let mut lo = 0usize; // largest degree known to fail
    let mut hi = None;
    let mut deg = 1usize;
    loop {
        if fit(deg, &mut tried) <= target {
            hi = Some(deg);
            break;
        }
        lo = deg;
        if deg >= cap {
            break;
        }
        deg = (deg * 2).min(cap);
    }
    let Some(mut hi) = hi else {
        let best = fits.values().map(|f| f.1).fold(f64::INFINITY, f64::min);
        return Err(PsdRankError::DegreeCapExceeded { cap, target, best });
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fit(mid, &mut tried) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (poly, sup_error) = fits.remove(&hi).expect("passing degree was fitted");
    Ok(SqrtApprox { degree: hi, poly, sup_error, degrees_tried: tried })
}

/// Shifted Chebyshev basis `T_j(2t - 1)` evaluated by the three-term recurrence.
fn chebyshev_row(t: f64, degree: usize, out: &mut [f64]) {
    let s = 2.0 * t - 1.0;
    out[0] = 1.0;
    if degree >= 1 {
        out[1] = s;
    }
    for j in 2..=degree {
        out[j] = 2.0 * s * out[j - 1] - out[j - 2];
    }
}

fn chebyshev_eval(c: &[f64], t: f64) -> f64 {
    // Clenshaw
    let s = 2.0 * t - 1.0;
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * s * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + s * b1 - b2
}

/// Monomial coefficients of `Σ c_j T_j(2t - 1)`.
fn chebyshev_to_monomial(c: &[f64]) -> Polynomial {
    let n = c.len();
    let mut out = vec![0.0; n];
    let mut prev = vec![1.0]; // T_0
    let mut cur = vec![-1.0, 2.0]; // T_1 = 2t - 1
    for (j, &cj) in c.iter().enumerate() {
        let basis: &[f64] = match j {
            0 => &prev,
            1 => &cur,
            _ => {
                // T_j = 2(2t-1) T_{j-1} - T_{j-2}
                let mut next = vec![0.0; j + 1];
                for (m, &v) in cur.iter().enumerate() {
                    next[m + 1] += 4.0 * v;
                    next[m] -= 2.0 * v;
                }
                for (m, &v) in prev.iter().enumerate() {
                    next[m] -= v;
                }
                prev = std::mem::replace(&mut cur, next);
                &cur
            }
        };
        for (m, &v) in basis.iter().enumerate() {
            out[m] += cj * v;
        }
    }
    Polynomial::new(out)
}

/// Truncated Chebyshev expansion of `√t` on `[0, 1]`, by discrete cosine
/// sums at Chebyshev points.
fn chebyshev_expansion_sqrt(degree: usize) -> Vec<f64> {
    let m = 4 * degree + 64;
    let mut c = vec![0.0; degree + 1];
    for i in 0..m {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
        let t = 0.5 * (theta.cos() + 1.0);
        let f = t.sqrt();
        for (j, cj) in c.iter_mut().enumerate() {
            *cj += f * (j as f64 * theta).cos();
        }
    }
    for (j, cj) in c.iter_mut().enumerate() {
        *cj *= if j == 0 { 1.0 } else { 2.0 } / m as f64;
    }
    c
}

/// Alternating-sign local extrema of the error, reduced to `want` points.
fn alternating_extrema(err: &[f64], want: usize) -> Option<Vec<usize>> {
    let mut ext: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < err.len() {
        if err[i] == 0.0 {
            i += 1;
            continue;
        }
        let sign = err[i] > 0.0;
        let mut best = i;
        while i < err.len() && (err[i] == 0.0 || (err[i] > 0.0) == sign) {
            if err[i].abs() > err[best].abs() {
                best = i;
            }
            i += 1;
        }
        ext.push(best);
    }
    if ext.len() < want {
        return None;
    }
    while ext.len() > want {
        if ext.len() - want == 1 {
            if err[ext[0]].abs() < err[*ext.last().unwrap()].abs() {
                ext.remove(0);
            } else {
                ext.pop();
            }
        } else {
            let k = (0..ext.len() - 1)
                .min_by(|&a, &b| {
                    let ma = err[ext[a]].abs().max(err[ext[a + 1]].abs());
                    let mb = err[ext[b]].abs().max(err[ext[b + 1]].abs());
                    ma.total_cmp(&mb)
                })
                .unwrap();
            ext.drain(k..k + 2);
        }
    }
    Some(ext)
}

/// Discrete minimax fit of `√t` on `grid` in the shifted Chebyshev basis,
/// by Remez exchange starting from the truncated Chebyshev expansion.
fn minimax_sqrt(degree: usize, grid: &[f64]) -> Polynomial {
    let want = degree + 2;
    let mut coeffs = chebyshev_expansion_sqrt(degree);
    let error_of = |c: &[f64]| -> Vec<f64> { grid.iter().map(|&t| t.sqrt() - chebyshev_eval(c, t)).collect() };
    let mut err = error_of(&coeffs);
    let mut best = (err.iter().fold(0.0, |m: f64, e| m.max(e.abs())), coeffs.clone());
    let mut row = vec![0.0; degree + 1];

    for _iter in 0..40 {
        let Some(reference) = alternating_extrema(&err, want) else { break };
        let mut a = Mat::zeros(want, want);
        let mut rhs = vec![0.0; want];
        for (r, &gi) in reference.iter().enumerate() {
            let t = grid[gi];
            chebyshev_row(t, degree, &mut row);
            for (j, &v) in row.iter().enumerate() {
                a[(r, j)] = v;
            }
            a[(r, degree + 1)] = if r % 2 == 0 { 1.0 } else { -1.0 };
            rhs[r] = t.sqrt();
        }
        let Some(sol) = linalg::lu_solve(&a, &rhs) else { break };
        let level = sol[degree + 1].abs();
        coeffs = sol[..=degree].to_vec();
        err = error_of(&coeffs);
        let sup = err.iter().fold(0.0, |m: f64, e| m.max(e.abs()));
        if sup < best.0 {
            best = (sup, coeffs.clone());
        }
        if sup - level <= 1e-6 * sup {
            break;
        }
    }
    chebyshev_to_monomial(&best.1)
}

/// `a_ij = ⟨u_i, v_j⟩` with `u_i, v_j ∈ R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankFactorization {
    pub n: usize,
    pub left: Vec<Vec<f64>>,
    pub right: Vec<Vec<f64>>,
}

impl RankFactorization {
    pub fn new(n: usize, left: Vec<Vec<f64>>, right: Vec<Vec<f64>>) -> Result<Self, PsdRankError> {
        if left.iter().chain(&right).any(|v| v.len() != n) {
            return Err(PsdRankError::Shape(format!("all factor vectors must have length {n}")));
        }
        Ok(RankFactorization { n, left, right })
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        linalg::dot(&self.left[i], &self.right[j])
    }

    pub fn to_dense(&self) -> Mat {
        Mat::from_fn(self.left.len(), self.right.len(), |i, j| self.entry(i, j))
    }
}

/// Rank factorization by complete-pivoting elimination at [`RANK_TOL`].
pub fn rank_factorize(a: &Mat) -> RankFactorization {
    let e = linalg::eliminate(a, RANK_TOL);
    let left = (0..a.rows()).map(|i| e.left.row(i).to_vec()).collect();
    let right = (0..a.cols()).map(|j| e.right.column(j)).collect();
    RankFactorization { n: e.rank, left, right }
}

/// Inner dimension `C(n + k, k)` produced by [`apply_poly_to_factorization`].
pub fn poly_transform_dim(n: usize, degree: usize) -> Result<usize, SizingError> {
    tensor::binomial(n + degree, degree)
}

/// Rank factorization of `p(a_ij)` from one of `a_ij`.
///
/// Left vectors are `(α_0, α_1 u, α_2 u^{⊗2}, …, α_k u^{⊗k})` and right
/// vectors `(1, v, v^{⊗2}, …, v^{⊗k})`, with the tensor powers stored in
/// symmetric coordinates.
pub fn apply_poly_to_factorization(f: &RankFactorization, p: &Polynomial) -> Result<RankFactorization, PsdRankError> {
    let k = p.degree().unwrap_or(0);
    let alpha = |m: usize| p.coeffs().get(m).copied().unwrap_or(0.0);
    let bases: Vec<SymBasis> = if f.n == 0 {
        Vec::new()
    } else {
        (1..=k).map(|m| SymBasis::new(f.n, m)).collect::<Result<_, _>>()?
    };
    let dim = poly_transform_dim(f.n, k)?;
    let build = |x: &Vec<f64>, left: bool| -> Vec<f64> {
        let mut out = Vec::with_capacity(dim);
        out.push(if left { alpha(0) } else { 1.0 });
        for (m, basis) in bases.iter().enumerate() {
            let scale = if left { alpha(m + 1) } else { 1.0 };
            out.extend(basis.lift(x).coords.into_iter().map(|c| scale * c));
        }
        out
    };
    let left: Vec<Vec<f64>> = f.left.iter().map(|u| build(u, true)).collect();
    let right: Vec<Vec<f64>> = f.right.iter().map(|v| build(v, false)).collect();
    debug_assert!(left.iter().chain(&right).all(|v| v.len() == dim));
    Ok(RankFactorization { n: dim, left, right })
}

/// A symmetric psd matrix, either as `w wᵀ` or stored in full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsdMatrix {
    Rank1(Vec<f64>),
    Full(Mat),
}

impl PsdMatrix {
    pub fn side(&self) -> usize {
        match self {
            PsdMatrix::Rank1(w) => w.len(),
            PsdMatrix::Full(m) => m.rows(),
        }
    }

    pub fn to_dense(&self) -> Mat {
        match self {
            PsdMatrix::Rank1(w) => Mat::outer(w),
            PsdMatrix::Full(m) => m.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            PsdMatrix::Rank1(w) => linalg::dot(w, w),
            PsdMatrix::Full(m) => m.trace(),
        }
    }

    /// Rank-one entries are psd by construction and report 0.
    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            PsdMatrix::Rank1(_) => 0.0,
            PsdMatrix::Full(m) => linalg::min_eigenvalue(m),
        }
    }

    /// Frobenius inner product.
    pub fn inner(&self, other: &PsdMatrix) -> f64 {
        match (self, other) {
            (PsdMatrix::Rank1(a), PsdMatrix::Rank1(b)) => {
                let d = linalg::dot(a, b);
                d * d
            }
            (PsdMatrix::Rank1(w), PsdMatrix::Full(m)) | (PsdMatrix::Full(m), PsdMatrix::Rank1(w)) => m.quad_form(w),
            (PsdMatrix::Full(a), PsdMatrix::Full(b)) => a.frobenius_dot(b),
        }
    }

    /// `⟨self, X⟩` for a dense symmetric `X`.
    pub fn inner_dense(&self, x: &Mat) -> f64 {
        match self {
            PsdMatrix::Rank1(w) => x.quad_form(w),
            PsdMatrix::Full(m) => m.frobenius_dot(x),
        }
    }
}

/// `a_ij = ⟨U_i, V_j⟩` with `r × r` psd matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdFactorization {
    pub r: usize,
    pub left: Vec<PsdMatrix>,
    pub right: Vec<PsdMatrix>,
}

impl PsdFactorization {
    pub fn realized(&self) -> Mat {
        Mat::from_fn(self.left.len(), self.right.len(), |i, j| self.left[i].inner(&self.right[j]))
    }
}

/// `U_i = u_i u_iᵀ`, `V_j = v_j v_jᵀ`, realizing `⟨u_i, v_j⟩²`.
pub fn square_factorization(f: &RankFactorization) -> PsdFactorization {
    PsdFactorization {
        r: f.n,
        left: f.left.iter().cloned().map(PsdMatrix::Rank1).collect(),
        right: f.right.iter().cloned().map(PsdMatrix::Rank1).collect(),
    }
}

/// Distinct entries of `a`, merging values within `tol` of the previous
/// kept value (ascending sweep).
pub fn distinct_values(a: &Mat, tol: f64) -> Vec<f64> {
    let mut vals: Vec<f64> = a.as_slice().to_vec();
    vals.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for v in vals {
        if out.last().is_none_or(|&last| v - last > tol) {
            out.push(v);
        }
    }
    out
}

/// Output of [`psd_factorize_few_values`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FewValuesFactorization {
    pub factorization: PsdFactorization,
    /// Interpolation nodes (the distinct values).
    pub values: Vec<f64>,
    pub rank: usize,
    /// `C(|S| - 1 + rank, |S| - 1)`.
    pub bound: usize,
    pub residual: f64,
}

/// Psd factorization of a dense nonnegative matrix with few distinct values.
pub fn psd_factorize_few_values(a: &Mat) -> Result<FewValuesFactorization, PsdRankError> {
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if a[(i, j)] < 0.0 {
                return Err(PsdRankError::NegativeEntry { row: i, col: j, value: a[(i, j)] });
            }
        }
    }
    let values = distinct_values(a, VALUE_MERGE_TOL);
    let f = rank_factorize(a);
    few_values_core(a, &f, &values)
}

/// Same construction from a given rank factorization and its value set.
pub fn psd_factorize_few_values_factored(
    f: &RankFactorization,
    values: &[f64],
) -> Result<FewValuesFactorization, PsdRankError> {
    if let Some(&v) = values.iter().find(|&&v| v < 0.0) {
        return Err(PsdRankError::NegativeEntry { row: 0, col: 0, value: v });
    }
    let a = f.to_dense();
    let scale = a.max_abs().max(1.0);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if a[(i, j)] < -1e-12 * scale {
                return Err(PsdRankError::NegativeEntry { row: i, col: j, value: a[(i, j)] });
            }
        }
    }
    few_values_core(&a, f, values)
}

fn few_values_core(a: &Mat, f: &RankFactorization, values: &[f64]) -> Result<FewValuesFactorization, PsdRankError> {
    let roots: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
    let p = lagrange_interpolate(values, &roots)?;
    let transformed = apply_poly_to_factorization(f, &p)?;
    let factorization = square_factorization(&transformed);
    let s = values.len().max(1);
    let bound = tensor::binomial(s - 1 + f.n, s - 1)?;
    debug_assert!(factorization.r <= bound);
    let residual = factorization.realized().sub(a).max_abs();
    let limit = 1e-7 * a.max_abs();
    if residual > limit && residual > 0.0 {
        return Err(PsdRankError::ResidualTooLarge { residual, limit });
    }
    Ok(FewValuesFactorization { factorization, values: values.to_vec(), rank: f.n, bound, residual })
}

/// Output of [`approx_low_psd_rank`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdApprox {
    pub approx: Mat,
    pub factorization: PsdFactorization,
    pub sqrt_approx: SqrtApprox,
    pub rank: usize,
    /// `C(deg p + rank, deg p)`.
    pub rank_bound: usize,
    /// `max |a_ij - a'_ij|`.
    pub max_deviation: f64,
}

/// Entrywise `ε`-approximation of a `[0, 1]` matrix by one of small psd rank.
pub fn approx_low_psd_rank(a: &Mat, eps: f64) -> Result<PsdApprox, PsdRankError> {
    approx_low_psd_rank_with(a, eps, DEFAULT_DEGREE_CAP)
}

pub fn approx_low_psd_rank_with(a: &Mat, eps: f64, degree_cap: usize) -> Result<PsdApprox, PsdRankError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(PsdRankError::InvalidEps(eps));
    }
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let v = a[(i, j)];
            if !(v >= -1e-12 && v <= 1.0 + 1e-12) {
                return Err(PsdRankError::EntryOutOfRange { row: i, col: j, value: v });
            }
        }
    }
    let sqrt_approx = sqrt_uniform_approx_with(eps, degree_cap)?;
    let f = rank_factorize(a);
    let transformed = apply_poly_to_factorization(&f, &sqrt_approx.poly)?;
    let factorization = square_factorization(&transformed);
    let approx = factorization.realized();
    let max_deviation = approx.sub(a).max_abs();
    let rank_bound = poly_transform_dim(f.n, sqrt_approx.degree)?;
    Ok(PsdApprox { approx, factorization, sqrt_approx, rank: f.n, rank_bound, max_deviation })
}

/// Recomputed residuals of a psd factorization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub max_residual: f64,
    pub min_eigenvalue_left: f64,
    pub min_eigenvalue_right: f64,
    pub pass: bool,
}

/// Pass requires `max |a_ij - ⟨U_i, V_j⟩| ≤ tol` and every stored matrix to
/// have smallest eigenvalue at least `-tol · (1 + trace)`.
pub fn verify_psd_factorization(a: &Mat, f: &PsdFactorization, tol: f64) -> PsdReport {
    let shape_ok = a.rows() == f.left.len()
        && a.cols() == f.right.len()
        && f.left.iter().chain(&f.right).all(|m| m.side() == f.r);
    let max_residual = if shape_ok { f.realized().sub(a).max_abs() } else { f64::INFINITY };
    let floor_ok = |m: &PsdMatrix, ev: f64| ev >= -tol * (1.0 + m.trace().abs());
    let mut psd_ok = true;
    let mut scan = |mats: &[PsdMatrix]| {
        mats.iter().fold(f64::INFINITY, |acc, m| {
            let ev = m.min_eigenvalue();
            psd_ok &= floor_ok(m, ev);
            acc.min(ev)
        })
    };
    let min_eigenvalue_left = scan(&f.left);
    let min_eigenvalue_right = scan(&f.right);
    PsdReport {
        max_residual,
        min_eigenvalue_left,
        min_eigenvalue_right,
        pass: shape_ok && max_residual <= tol && psd_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolate_line() {
        let p = lagrange_interpolate(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(p.degree(), Some(1));
        assert!(p.coeffs()[0].abs() < 1e-15);
        assert!((p.coeffs()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolate_sqrt_three_nodes() {
        let r = 0.5f64.sqrt();
        let p = lagrange_interpolate(&[0.0, 0.5, 1.0], &[0.0, r, 1.0]).unwrap();
        // hand-solved Vandermonde system: a/2 + b/4 = √½, a + b = 1
        let a = 4.0 * r - 1.0;
        let b = 1.0 - a;
        assert!((p.coeffs()[1] - a).abs() < 1e-12);
        assert!((p.coeffs()[2] - b).abs() < 1e-12);
        assert!((p.coeffs()[1] - 1.828427).abs() < 1e-6);
        assert!((p.eval(0.5) - 0.707107).abs() < 1e-6);
        assert!((p.eval(0.5) - r).abs() < 1e-9);
    }

    #[test]
    fn interpolate_reproduces_values() {
        for k in 1..7 {
            let nodes: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
            let vals: Vec<f64> = nodes.iter().map(|t| (3.0 * t).sin() + t.sqrt()).collect();
            let p = lagrange_interpolate(&nodes, &vals).unwrap();
            assert!(p.degree().unwrap() <= k);
            for (t, v) in nodes.iter().zip(&vals) {
                assert!((p.eval(*t) - v).abs() <= 1e-9 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn close_nodes_rejected() {
        let err = lagrange_interpolate(&[0.0, 1.0, 1.0 + 1e-14], &[0.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, PsdRankError::NodesTooClose { .. }));
    }

    #[test]
    fn sqrt_degree_one_for_loose_eps() {
        let s = sqrt_uniform_approx(0.9).unwrap();
        assert_eq!(s.degree, 1);
        let grid = sqrt_grid();
        assert!(grid_sup_error(&s.poly, &grid) <= 0.3);
        // best linear approximation of √t on [0,1] has error 1/8
        assert!((s.sup_error - 0.125).abs() < 1e-3);
    }

    #[test]
    fn sqrt_eps_point_three() {
        let s = sqrt_uniform_approx(0.3).unwrap();
        let grid = sqrt_grid();
        let e = grid_sup_error(&s.poly, &grid);
        assert!(e <= 0.1);
        assert_eq!(e, s.sup_error);
        // range contract: p(t) ∈ [-eps/3, 1 + eps/3]
        for &t in grid.iter().step_by(97) {
            let v = s.poly.eval(t);
            assert!((-0.1..=1.1).contains(&v));
        }
    }

    #[test]
    fn sqrt_tiny_eps_hits_cap() {
        let err = sqrt_uniform_approx_with(1e-4, 24).unwrap_err();
        assert!(matches!(err, PsdRankError::DegreeCapExceeded { cap: 24, .. }));
        assert!(matches!(sqrt_uniform_approx(1.5), Err(PsdRankError::InvalidEps(_))));
    }

    #[test]
    fn chebyshev_conversion_matches_clenshaw() {
        let c = [0.3, -1.2, 0.7, 0.05, -0.4];
        let p = chebyshev_to_monomial(&c);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            assert!((p.eval(t) - chebyshev_eval(&c, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_poly_keeps_products() {
        let f = RankFactorization::new(2, vec![vec![1.0, 2.0], vec![-1.0, 0.5]], vec![vec![0.3, 0.1]]).unwrap();
        let p = Polynomial::new(vec![0.0, 1.0]);
        let g = apply_poly_to_factorization(&f, &p).unwrap();
        assert_eq!(g.n, 3);
        for i in 0..2 {
            assert_eq!(g.entry(i, 0), f.entry(i, 0));
        }
    }

    #[test]
    fn square_poly_on_orthogonal_pair() {
        let f = RankFactorization::new(2, vec![vec![1.0, 1.0]], vec![vec![1.0, -1.0]]).unwrap();
        let g = apply_poly_to_factorization(&f, &Polynomial::new(vec![0.0, 0.0, 1.0])).unwrap();
        assert!(g.entry(0, 0).abs() < 1e-15);
        assert_eq!(g.n, 6);
    }

    #[test]
    fn squaring_examples() {
        let f = RankFactorization::new(2, vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]).unwrap();
        assert_eq!(square_factorization(&f).realized()[(0, 0)], 0.0);
        let g = RankFactorization::new(2, vec![vec![1.0, 1.0]], vec![vec![1.0, 1.0]]).unwrap();
        assert_eq!(square_factorization(&g).realized()[(0, 0)], 4.0);
    }

    #[test]
    fn ones_matrix_has_scalar_factorization() {
        let a = Mat::from_fn(3, 3, |_, _| 1.0);
        let out = psd_factorize_few_values(&a).unwrap();
        assert_eq!(out.values, vec![1.0]);
        assert_eq!(out.rank, 1);
        assert_eq!(out.bound, 1);
        assert_eq!(out.factorization.r, 1);
        for m in out.factorization.left.iter().chain(&out.factorization.right) {
            assert_eq!(m.to_dense().as_slice().len(), 1);
            assert!((m.to_dense()[(0, 0)].abs() - 1.0).abs() < 1e-15);
        }
        let report = verify_psd_factorization(&a, &out.factorization, 1e-12);
        assert_eq!(report.max_residual, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn identity_two_by_two() {
        let a = Mat::identity(2);
        let out = psd_factorize_few_values(&a).unwrap();
        assert_eq!(out.bound, 3);
        assert!(out.factorization.r <= 3);
        let report = verify_psd_factorization(&a, &out.factorization, 1e-10);
        assert!(report.max_residual <= 1e-10);
        assert!(report.pass);
    }

    #[test]
    fn negative_entry_rejected() {
        let a = Mat::from_rows(&[[1.0, -0.5]]);
        assert!(matches!(psd_factorize_few_values(&a), Err(PsdRankError::NegativeEntry { row: 0, col: 1, .. })));
    }

    #[test]
    fn zero_matrix_approximation() {
        let a = Mat::zeros(3, 4);
        let out = approx_low_psd_rank(&a, 0.5).unwrap();
        assert_eq!(out.rank, 0);
        assert_eq!(out.rank_bound, 1);
        let p0 = out.sqrt_approx.poly.eval(0.0);
        for v in out.approx.as_slice() {
            assert!((v - p0 * p0).abs() < 1e-15);
            assert!(*v <= (0.5f64 / 3.0).powi(2) + 1e-15);
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let a = Mat::from_rows(&[[0.5, 1.5]]);
        assert!(matches!(approx_low_psd_rank(&a, 0.2), Err(PsdRankError::EntryOutOfRange { col: 1, .. })));
    }

    #[test]
    fn verify_flags_indefinite_plant() {
        let a = Mat::from_rows(&[[0.0]]);
        let f = PsdFactorization {
            r: 2,
            left: vec![PsdMatrix::Full(Mat::from_diag(&[1.0, -1.0]))],
            right: vec![PsdMatrix::Full(Mat::identity(2))],
        };
        let r = verify_psd_factorization(&a, &f, 1e-9);
        assert_eq!(r.min_eigenvalue_left, -1.0);
        assert!(!r.pass);
    }

    #[test]
    fn verify_reports_diagonal_perturbation() {
        let tol = 1e-6;
        let a = Mat::from_rows(&[[1.0]]);
        let f = PsdFactorization {
            r: 1,
            left: vec![PsdMatrix::Full(Mat::from_rows(&[[1.0 - 2.0 * tol]]))],
            right: vec![PsdMatrix::Full(Mat::from_rows(&[[1.0]]))],
        };
        let r = verify_psd_factorization(&a, &f, tol);
        assert!((r.max_residual - 2.0 * tol).abs() < 1e-15);
        assert!(!r.pass);
    }

    #[test]
    fn psd_matrix_json_shape() {
        let r1 = serde_json::to_string(&PsdMatrix::Rank1(vec![1.0, 2.0])).unwrap();
        assert_eq!(r1, r#"{"rank1":[1.0,2.0]}"#);
        let full = serde_json::to_string(&PsdMatrix::Full(Mat::identity(2))).unwrap();
        assert_eq!(full, r#"{"full":[[1.0,0.0],[0.0,1.0]]}"#);
    }
}
