//! Spectrahedral lifts of integer point sets, exact in bounded-width
//! directions.
//!
//! For `B ⊂ Z^d`, a width budget `k` and a finite set `J` of integer
//! directions `v` with `max_B ⟨u, v⟩ - min_B ⟨u, v⟩ ≤ k`, put
//! `m_v = max_B ⟨u, v⟩`, `v̂ = (v, k - m_v)` and `û = (u, 1)`. The slack
//! matrix `a_uv = 1 - ⟨û, v̂⟩ / k = (m_v - ⟨u, v⟩) / k` takes at most `k + 1`
//! values in `[0, 1]` and has rank at most `d + 2`, so it has a psd
//! factorization `a_uv = ⟨U_u, V_v⟩` with `r ≤ C(d+k+2, k)`. The set
//!
//! ```text
//! C = { x : ∃ X ⪰ 0 with ⟨x, v⟩ = m_v - k ⟨X, V_v⟩ for all v ∈ J }
//! ```
//!
//! contains `B` (witness `X = U_u`) and satisfies `max_C ⟨v, x⟩ = m_v` for
//! every `v ∈ J`. Directions orthogonal to all of `J` are free in `C`.

use crate::linalg::{self, Mat};
use crate::psdrank::{self, PsdMatrix, PsdRankError, RankFactorization};
use crate::sketch::PointSet;
use crate::tensor::{self, SizingError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the number of candidate directions `(2·radius + 1)^d`.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;
/// Largest tolerated `max |a_ij - ⟨U_i, V_j⟩|` when assembling a lift.
pub const ASSEMBLY_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum LiftError {
    #[error("empty point set")]
    EmptyPointSet,
    #[error("point set must have dimension at least 1")]
    ZeroDimension,
    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch { index: usize, got: usize, expected: usize },
    #[error("point {index} coordinate {coord} is not an integer: {value}")]
    NonInteger { index: usize, coord: usize, value: f64 },
    #[error("k must be positive")]
    ZeroWidth,
    #[error("radius must be positive")]
    ZeroRadius,
    #[error("enumeration of {count} candidate directions exceeds the cap {cap}")]
    EnumerationTooLarge { count: String, cap: usize },
    #[error("integer overflow while evaluating ⟨u, v⟩")]
    Overflow,
    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),
    #[error("assembly residual {residual:.3e} exceeds {limit:.3e}")]
    AssemblyResidual { residual: f64, limit: f64 },
    #[error("psd size {r} exceeds the bound {bound}")]
    RankBound { r: usize, bound: usize },
    #[error(transparent)]
    PsdRank(#[from] PsdRankError),
    #[error(transparent)]
    Sizing(#[from] SizingError),
    #[error("lift is infeasible: {0}")]
    Infeasible(String),
    #[error("barrier solver stopped after {iterations} iterations with gap {gap:.3e}")]
    IterationLimit { iterations: usize, gap: f64 },
}

/// A finite subset of `Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePoints {
    pub dim: usize,
    pub points: Vec<Vec<i64>>,
}

impl LatticePoints {
    pub fn new(points: Vec<Vec<i64>>) -> Result<Self, LiftError> {
        let dim = points.first().ok_or(LiftError::EmptyPointSet)?.len();
        if dim == 0 {
            return Err(LiftError::ZeroDimension);
        }
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(LiftError::DimensionMismatch { index, got: p.len(), expected: dim });
            }
        }
        Ok(LatticePoints { dim, points })
    }

    /// Rejects any coordinate that is not an integer representable as `i64`.
    pub fn from_real(set: &PointSet) -> Result<Self, LiftError> {
        let mut out = Vec::with_capacity(set.points.len());
        for (index, p) in set.points.iter().enumerate() {
            let mut row = Vec::with_capacity(p.len());
            for (coord, &value) in p.iter().enumerate() {
                if value.fract() != 0.0 || !value.is_finite() || value.abs() > 9.007_199_254_740_992e15 {
                    return Err(LiftError::NonInteger { index, coord, value });
                }
                row.push(value as i64);
            }
            out.push(row);
        }
        LatticePoints::new(out)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn as_real(&self, i: usize) -> Vec<f64> {
        self.points[i].iter().map(|&c| c as f64).collect()
    }
}

fn int_dot(u: &[i64], v: &[i64]) -> Result<i64, LiftError> {
    let s: i128 = u.iter().zip(v).map(|(&a, &b)| a as i128 * b as i128).sum();
    i64::try_from(s).map_err(|_| LiftError::Overflow)
}

/// `(max, min)` of `⟨u, v⟩` over the points, with the first maximizer.
fn extremes(b: &LatticePoints, v: &[i64]) -> Result<(i64, i64, usize), LiftError> {
    let mut best = (i64::MIN, i64::MAX, 0);
    for (i, u) in b.points.iter().enumerate() {
        let s = int_dot(u, v)?;
        if s > best.0 {
            best.0 = s;
            best.2 = i;
        }
        best.1 = best.1.min(s);
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Direction {
    pub v: Vec<i64>,
    /// `max_B ⟨u, v⟩`.
    pub m: i64,
    /// `max_B ⟨u, v⟩ - min_B ⟨u, v⟩`.
    pub width: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionSet {
    pub k: i64,
    pub radius: i64,
    pub entries: Vec<Direction>,
}

impl DirectionSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `v̂ = (v, k - m)`.
    pub fn lifted(&self, j: usize) -> Vec<i64> {
        let e = &self.entries[j];
        let mut out = e.v.clone();
        out.push(self.k - e.m);
        out
    }
}

pub fn enumerate_directions(b: &LatticePoints, k: i64, radius: i64) -> Result<DirectionSet, LiftError> {
    enumerate_directions_with(b, k, radius, DEFAULT_ENUMERATION_CAP)
}

/// All `v ∈ Z^d` with `‖v‖∞ ≤ radius` and width at most `k`, in
/// lexicographic order. `v = 0` always qualifies.
pub fn enumerate_directions_with(b: &LatticePoints, k: i64, radius: i64, cap: usize) -> Result<DirectionSet, LiftError> {
    if b.is_empty() {
        return Err(LiftError::EmptyPointSet);
    }
    if k <= 0 {
        return Err(LiftError::ZeroWidth);
    }
    if radius <= 0 {
        return Err(LiftError::ZeroRadius);
    }
    let side = 2 * radius as u128 + 1;
    let count = side.checked_pow(b.dim as u32).filter(|&c| c <= cap as u128);
    let Some(count) = count else {
        let shown = side.checked_pow(b.dim as u32).map_or(format!("{side}^{}", b.dim), |c| c.to_string());
        return Err(LiftError::EnumerationTooLarge { count: shown, cap });
    };
    let d = b.dim;
    let candidate = |idx: usize| -> Vec<i64> {
        let mut v = vec![0i64; d];
        let mut rest = idx as u128;
        for c in (0..d).rev() {
            v[c] = (rest % side) as i64 - radius;
            rest /= side;
        }
        v
    };
    let entries: Vec<Result<Option<Direction>, LiftError>> = (0..count as usize)
        .into_par_iter()
        .map(|idx| {
            let v = candidate(idx);
            let (m, lo, _) = extremes(b, &v)?;
            let width = m - lo;
            Ok((width <= k).then_some(Direction { v, m, width }))
        })
        .collect();
    let entries = entries.into_iter().filter_map(Result::transpose).collect::<Result<Vec<_>, _>>()?;
    Ok(DirectionSet { k, radius, entries })
}

/// Slack matrix stored as integer numerators `k · a_ij`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlackMatrix {
    pub k: i64,
    pub numerators: Vec<Vec<i64>>,
}

impl SlackMatrix {
    pub fn rows(&self) -> usize {
        self.numerators.len()
    }

    pub fn cols(&self) -> usize {
        self.numerators.first().map_or(0, Vec::len)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.numerators[i][j] as f64 / self.k as f64
    }

    pub fn to_dense(&self) -> Mat {
        Mat::from_fn(self.rows(), self.cols(), |i, j| self.value(i, j))
    }

    /// Distinct numerators, ascending.
    pub fn distinct_numerators(&self) -> Vec<i64> {
        let mut vals: Vec<i64> = self.numerators.iter().flatten().copied().collect();
        vals.sort_unstable();
        vals.dedup();
        vals
    }
}

/// `k · a_ij = m_j - ⟨u_i, v_j⟩`, with every `m_j` re-derived from `B`.
pub fn build_slack_matrix(b: &LatticePoints, dirs: &DirectionSet, k: i64) -> Result<SlackMatrix, LiftError> {
    if k != dirs.k {
        return Err(LiftError::InconsistentInputs(format!("directions were built for k = {}, not {k}", dirs.k)));
    }
    for (j, e) in dirs.entries.iter().enumerate() {
        if e.v.len() != b.dim {
            return Err(LiftError::InconsistentInputs(format!("direction {j} has the wrong dimension")));
        }
        let (m, lo, _) = extremes(b, &e.v)?;
        if m != e.m || m - lo != e.width || e.width > k {
            return Err(LiftError::InconsistentInputs(format!("direction {j}: recorded m = {}, recomputed {m}", e.m)));
        }
    }
    let numerators = b
        .points
        .iter()
        .map(|u| dirs.entries.iter().map(|e| int_dot(u, &e.v).map(|s| e.m - s)).collect())
        .collect::<Result<Vec<Vec<i64>>, _>>()?;
    Ok(SlackMatrix { k, numerators })
}

/// One affine constraint `1 - ⟨x̂, v̂⟩ / k = ⟨X, V⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub v_hat: Vec<i64>,
    pub matrix: PsdMatrix,
}

/// A point `û = (u, 1)` of `B` and its witness `U ⪰ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub u_hat: Vec<i64>,
    pub matrix: PsdMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrahedralLift {
    pub d: usize,
    pub k: i64,
    pub r: usize,
    pub constraints: Vec<Constraint>,
    pub certificates: Vec<Certificate>,
    /// Orthonormal basis of `L = span(v̂_j)` in `R^{d+1}`.
    pub span_basis: Vec<Vec<f64>>,
    /// Orthonormal basis of `L^⊥ ∩ R^d`, the free directions of `C`.
    pub free_basis: Vec<Vec<f64>>,
    /// Interpolation nodes used by the factorization.
    pub values: Vec<f64>,
    pub identity_residual: f64,
}

impl SpectrahedralLift {
    /// `m_j = k - v̂_j[d]`.
    pub fn m(&self, j: usize) -> i64 {
        self.k - self.constraints[j].v_hat[self.d]
    }

    pub fn direction(&self, j: usize) -> &[i64] {
        &self.constraints[j].v_hat[..self.d]
    }
}

pub fn build_lift(b: &LatticePoints, dirs: &DirectionSet, k: i64) -> Result<SpectrahedralLift, LiftError> {
    let slack = build_slack_matrix(b, dirs, k)?;
    let d = b.dim;
    let kf = k as f64;
    let u_hats: Vec<Vec<i64>> = b.points.iter().map(|u| u.iter().copied().chain([1]).collect()).collect();
    let v_hats: Vec<Vec<i64>> = (0..dirs.len()).map(|j| dirs.lifted(j)).collect();
    // a_ij = ⟨(1, -û_i/k), (1, v̂_j)⟩
    let left: Vec<Vec<f64>> =
        u_hats.iter().map(|u| std::iter::once(1.0).chain(u.iter().map(|&c| -(c as f64) / kf)).collect()).collect();
    let right: Vec<Vec<f64>> =
        v_hats.iter().map(|v| std::iter::once(1.0).chain(v.iter().map(|&c| c as f64)).collect()).collect();
    let f = RankFactorization::new(d + 2, left, right)?;
    let values: Vec<f64> = slack.distinct_numerators().iter().map(|&n| n as f64 / kf).collect();
    let few = psdrank::psd_factorize_few_values_factored(&f, &values)?;
    let fac = few.factorization;

    let bound = tensor::binomial(d + k as usize + 2, k as usize)?;
    if fac.r > bound {
        return Err(LiftError::RankBound { r: fac.r, bound });
    }
    let realized = fac.realized();
    let identity_residual = realized.sub(&slack.to_dense()).max_abs();
    if identity_residual > ASSEMBLY_TOL {
        return Err(LiftError::AssemblyResidual { residual: identity_residual, limit: ASSEMBLY_TOL });
    }

    let real = |v: &[i64]| v.iter().map(|&c| c as f64).collect::<Vec<f64>>();
    let span_basis = linalg::orthonormal_basis(&v_hats.iter().map(|v| real(v)).collect::<Vec<_>>(), 1e-10);
    let dir_basis = linalg::orthonormal_basis(&dirs.entries.iter().map(|e| real(&e.v)).collect::<Vec<_>>(), 1e-10);
    let free_basis = linalg::orthogonal_complement(&dir_basis, d);

    let constraints = v_hats.into_iter().zip(fac.right).map(|(v_hat, matrix)| Constraint { v_hat, matrix }).collect();
    let certificates = u_hats.into_iter().zip(fac.left).map(|(u_hat, matrix)| Certificate { u_hat, matrix }).collect();
    Ok(SpectrahedralLift {
        d,
        k,
        r: fac.r,
        constraints,
        certificates,
        span_basis,
        free_basis,
        values,
        identity_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionCertificate {
    pub v: Vec<i64>,
    /// `max_B ⟨u, v⟩` by enumeration.
    pub m: i64,
    /// First point of `B` with zero slack in this direction.
    pub attained_by: Option<usize>,
    pub dual_valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactnessReport {
    pub directions: Vec<DirectionCertificate>,
    pub identity_residual: f64,
    /// Smallest eigenvalue over all `U_i` and `V_j`.
    pub min_eig_floor: f64,
    pub psd_ok: bool,
    pub pass: bool,
}

fn psd_within(m: &PsdMatrix, side: usize, tol: f64) -> (bool, f64) {
    if m.side() != side {
        return (false, f64::NEG_INFINITY);
    }
    let ev = m.min_eigenvalue();
    (ev >= -tol * (1.0 + m.trace().abs()), ev)
}

/// Re-derives every slack entry and every `m_j` from `B` and checks the
/// lift's matrices against them.
pub fn certify_exactness(lift: &SpectrahedralLift, b: &LatticePoints, dirs: &DirectionSet, tol: f64) -> ExactnessReport {
    let fail = |directions| ExactnessReport {
        directions,
        identity_residual: f64::INFINITY,
        min_eig_floor: f64::NEG_INFINITY,
        psd_ok: false,
        pass: false,
    };
    let Ok(slack) = build_slack_matrix(b, dirs, lift.k) else { return fail(Vec::new()) };
    if lift.d != b.dim || lift.constraints.len() != dirs.len() || lift.certificates.len() != b.len() {
        return fail(Vec::new());
    }

    let cert_psd: Vec<(bool, f64)> = lift.certificates.iter().map(|c| psd_within(&c.matrix, lift.r, tol)).collect();
    let cons_psd: Vec<(bool, f64)> = lift.constraints.par_iter().map(|c| psd_within(&c.matrix, lift.r, tol)).collect();
    let shapes_ok = cert_psd.iter().chain(&cons_psd).all(|p| p.1 > f64::NEG_INFINITY);

    let certs_match = lift
        .certificates
        .iter()
        .zip(&b.points)
        .all(|(c, u)| c.u_hat.len() == lift.d + 1 && c.u_hat[..lift.d] == u[..] && c.u_hat[lift.d] == 1);

    let identity_residual = if shapes_ok {
        (0..dirs.len())
            .into_par_iter()
            .map(|j| {
                let vj = &lift.constraints[j].matrix;
                (0..b.len())
                    .map(|i| (slack.value(i, j) - lift.certificates[i].matrix.inner(vj)).abs())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    } else {
        f64::INFINITY
    };

    let directions: Vec<DirectionCertificate> = dirs
        .entries
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let attained_by = (0..b.len()).find(|&i| slack.numerators[i][j] == 0);
            let lifted_ok = lift.constraints[j].v_hat == dirs.lifted(j);
            DirectionCertificate {
                v: e.v.clone(),
                m: e.m,
                attained_by,
                dual_valid: cons_psd[j].0 && lifted_ok && attained_by.is_some(),
            }
        })
        .collect();

    let min_eig_floor = cert_psd.iter().chain(&cons_psd).map(|p| p.1).fold(f64::INFINITY, f64::min);
    let psd_ok = cert_psd.iter().chain(&cons_psd).all(|p| p.0);
    let pass = shapes_ok
        && certs_match
        && psd_ok
        && identity_residual <= tol
        && directions.iter().all(|d| d.dual_valid);
    ExactnessReport { directions, identity_residual, min_eig_floor, psd_ok, pass }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiftStatus {
    Optimal,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftOptimum {
    pub status: LiftStatus,
    /// `max_C ⟨c, x⟩` within `gap`; `+∞` when unbounded.
    pub value: f64,
    /// Duality gap at termination.
    pub gap: f64,
    pub newton_steps: usize,
}

const BARRIER_MU: f64 = 0.2;
const MAX_OUTER: usize = 200;
const MAX_NEWTON: usize = 200;

/// Vectors `f` with `M = Σ f fᵀ`.
fn factor_vectors(m: &PsdMatrix) -> Vec<Vec<f64>> {
    match m {
        PsdMatrix::Rank1(w) => vec![w.clone()],
        PsdMatrix::Full(a) => {
            let eig = linalg::sym_eigen(a);
            let top = eig.max().max(0.0);
            (0..a.rows())
                .filter(|&c| eig.values[c] > 1e-12 * top)
                .map(|c| eig.vectors.column(c).iter().map(|x| x * eig.values[c].sqrt()).collect())
                .collect()
        }
    }
}

/// Matrices `G_j` of the reduced dual LMI `Σ y_j G_j ⪰ 0`.
struct ReducedLmi {
    mats: Vec<Mat>,
    q: usize,
}

impl ReducedLmi {
    fn eval(&self, y: &[f64]) -> Mat {
        let mut s = Mat::zeros(self.q, self.q);
        for (g, &yj) in self.mats.iter().zip(y) {
            s = s.add(&g.scaled(yj));
        }
        s
    }
}

/// `max ⟨c, x⟩` over the lift by a log-det barrier on the dual
///
/// ```text
/// min Σ y_j m_j   s.t.   Σ y_j v_j = c,   Σ y_j V_j ⪰ 0,
/// ```
///
/// whose optimum equals the primal optimum. Zero-width directions pin
/// `⟨x, v⟩` exactly and force `X V_v = 0`; they are eliminated before the
/// solve so that the remaining dual has a strictly feasible point.
pub fn maximize_over_lift(lift: &SpectrahedralLift, c: &[f64], tol: f64) -> Result<LiftOptimum, LiftError> {
    let d = lift.d;
    if c.len() != d {
        return Err(LiftError::InconsistentInputs(format!("objective has length {}, expected {d}", c.len())));
    }
    let cn = linalg::norm(c);
    let directions: Vec<Vec<f64>> = (0..lift.constraints.len())
        .map(|j| lift.direction(j).iter().map(|&x| x as f64).collect())
        .collect();
    let span = linalg::orthonormal_basis(&directions, 1e-10);
    let mut c_perp = c.to_vec();
    for q in &span {
        let s = linalg::dot(q, &c_perp);
        linalg::axpy(-s, q, &mut c_perp);
    }
    if linalg::norm(&c_perp) > tol * cn.max(f64::MIN_POSITIVE) {
        return Ok(LiftOptimum { status: LiftStatus::Unbounded, value: f64::INFINITY, gap: 0.0, newton_steps: 0 });
    }
    let anchor = lift
        .certificates
        .first()
        .ok_or_else(|| LiftError::Infeasible("no certificate point".into()))?
        .u_hat[..d]
        .iter()
        .map(|&x| x as f64)
        .collect::<Vec<f64>>();

    // flat: both v and -v present with m_v + m_{-v} = 0
    let ms: Vec<i64> = (0..lift.constraints.len()).map(|j| lift.m(j)).collect();
    let flat: Vec<bool> = (0..lift.constraints.len())
        .map(|j| {
            let v = lift.direction(j);
            (0..lift.constraints.len()).any(|l| lift.direction(l).iter().zip(v).all(|(a, b)| *a == -*b) && ms[j] + ms[l] == 0)
        })
        .collect();
    let flat_dirs: Vec<Vec<f64>> = (0..flat.len()).filter(|&j| flat[j]).map(|j| directions[j].clone()).collect();
    let fbasis = linalg::orthonormal_basis(&flat_dirs, 1e-10);
    let proj_f = |x: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; d];
        for f in &fbasis {
            linalg::axpy(linalg::dot(f, x), f, &mut out);
        }
        out
    };
    let constant = linalg::dot(&proj_f(c), &anchor);
    let active: Vec<usize> = (0..flat.len()).filter(|&j| !flat[j]).collect();
    if active.is_empty() {
        return Ok(LiftOptimum { status: LiftStatus::Optimal, value: constant, gap: 0.0, newton_steps: 0 });
    }

    // reduced psd space: ranges of active V_j with flat ranges projected out
    let mut pinned: Vec<Vec<f64>> = Vec::new();
    for j in (0..flat.len()).filter(|&j| flat[j]) {
        for fv in factor_vectors(&lift.constraints[j].matrix) {
            linalg::extend_basis(&mut pinned, &fv, 1e-10);
        }
    }
    let n_pinned = pinned.len();
    let active_factors: Vec<Vec<Vec<f64>>> =
        active.iter().map(|&j| factor_vectors(&lift.constraints[j].matrix)).collect();
    let mut basis = pinned;
    for fs in &active_factors {
        for fv in fs {
            linalg::extend_basis(&mut basis, fv, 1e-10);
        }
    }
    let g_basis: Vec<Vec<f64>> = basis.split_off(n_pinned);
    let q = g_basis.len();
    if q == 0 {
        return Err(LiftError::Infeasible("active constraints have no psd range".into()));
    }
    let mats: Vec<Mat> = active_factors
        .iter()
        .map(|fs| {
            let mut g = Mat::zeros(q, q);
            for fv in fs {
                let red: Vec<f64> = g_basis.iter().map(|b| linalg::dot(b, fv)).collect();
                g.add_outer(1.0, &red);
            }
            g
        })
        .collect();
    let lmi = ReducedLmi { mats, q };

    // equality Ã y = c̃ on the complement of the flat span
    let n = active.len();
    let a_cols: Vec<Vec<f64>> = active
        .iter()
        .map(|&j| {
            let pv = proj_f(&directions[j]);
            directions[j].iter().zip(&pv).map(|(a, b)| a - b).collect()
        })
        .collect();
    let cost: Vec<f64> = active
        .iter()
        .map(|&j| ms[j] as f64 - linalg::dot(&proj_f(&directions[j]), &anchor))
        .collect();
    let pc = proj_f(c);
    let c_tilde: Vec<f64> = c.iter().zip(&pc).map(|(a, b)| a - b).collect();
    let w_basis = linalg::orthonormal_basis(&a_cols, 1e-10);
    let p = w_basis.len();
    let e = Mat::from_fn(p, n, |r, j| linalg::dot(&w_basis[r], &a_cols[j]));
    let h: Vec<f64> = w_basis.iter().map(|w| linalg::dot(w, &c_tilde)).collect();

    // least-norm particular solution, then push into the interior along 1
    let mut y = if p > 0 {
        let eet = e.matmul(&e.transpose());
        let z = linalg::lu_solve(&eet, &h).ok_or_else(|| LiftError::Infeasible("singular equality system".into()))?;
        e.transpose().matvec(&z)
    } else {
        vec![0.0; n]
    };
    let ones = vec![1.0; n];
    if linalg::norm(&e.matvec(&ones)) > 1e-9 * (n as f64) {
        return Err(LiftError::Infeasible("direction set is not symmetric".into()));
    }
    let s1_min = linalg::min_eigenvalue(&lmi.eval(&ones));
    if s1_min <= 0.0 {
        return Err(LiftError::Infeasible("no strictly feasible dual point".into()));
    }
    let s0_min = linalg::min_eigenvalue(&lmi.eval(&y));
    let tau = ((-s0_min).max(0.0) + 1.0) / s1_min;
    linalg::axpy(tau, &ones, &mut y);

    let row_basis = linalg::orthonormal_basis(&e.to_rows(), 1e-10);
    let null_vecs = linalg::orthogonal_complement(&row_basis, n);
    if null_vecs.is_empty() {
        let value = linalg::dot(&cost, &y) + constant;
        return Ok(LiftOptimum { status: LiftStatus::Optimal, value, gap: 0.0, newton_steps: 0 });
    }
    let null = Mat::from_fn(n, null_vecs.len(), |a, b| null_vecs[b][a]);
    let null_t = null.transpose();

    let objective = |y: &[f64]| linalg::dot(&cost, y);
    let mut t = 1.0 / (1.0 + objective(&y).abs());
    let mut steps = 0usize;
    for _outer in 0..MAX_OUTER {
        // centering by feasible-start Newton
        for _inner in 0..MAX_NEWTON {
            let s = lmi.eval(&y);
            let Some(l) = linalg::cholesky(&s) else {
                return Err(LiftError::Infeasible("barrier iterate left the cone".into()));
            };
            let s_inv = linalg::cholesky_inverse(&l);
            let ms_: Vec<Mat> = lmi.mats.par_iter().map(|g| s_inv.matmul(g)).collect();
            let mut grad = vec![0.0; n];
            let mut hess = Mat::zeros(n, n);
            for j in 0..n {
                grad[j] = t * cost[j] - ms_[j].trace();
                for l2 in j..n {
                    // tr(S⁻¹ G_j S⁻¹ G_l)
                    let v = ms_[j].transpose().frobenius_dot(&ms_[l2]);
                    hess[(j, l2)] = v;
                    hess[(l2, j)] = v;
                }
            }
            // Newton step restricted to ker E, equilibrated before factoring
            let hz = null_t.matmul(&hess).matmul(&null);
            let gz = null_t.matvec(&grad);
            let nz = hz.rows();
            let dscale: Vec<f64> = (0..nz).map(|j| 1.0 / hz[(j, j)].max(f64::MIN_POSITIVE).sqrt()).collect();
            let mut hs = Mat::from_fn(nz, nz, |a, b| dscale[a] * hz[(a, b)] * dscale[b]);
            let rs: Vec<f64> = (0..nz).map(|j| -gz[j] * dscale[j]).collect();
            let mut ridge = 1e-14;
            let chol = loop {
                if let Some(l) = linalg::cholesky(&hs) {
                    break l;
                }
                if ridge > 1e-4 {
                    return Err(LiftError::Infeasible("singular Newton system".into()));
                }
                for j in 0..nz {
                    hs[(j, j)] += ridge;
                }
                ridge *= 100.0;
            };
            let dz: Vec<f64> = linalg::cholesky_solve(&chol, &rs).iter().zip(&dscale).map(|(a, b)| a * b).collect();
            let dy = null.matvec(&dz);
            let dy = &dy[..];
            let decrement = hess.quad_form(dy);
            steps += 1;
            if decrement / 2.0 <= 1e-10 {
                break;
            }
            let phi = |y: &[f64]| -> Option<f64> {
                let l = linalg::cholesky(&lmi.eval(y))?;
                let logdet: f64 = (0..q).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
                Some(t * objective(y) - logdet)
            };
            let phi0 = phi(&y).unwrap_or(f64::INFINITY);
            let slope = linalg::dot(&grad, dy);
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-14 {
                let cand: Vec<f64> = y.iter().zip(dy).map(|(a, b)| a + step * b).collect();
                if let Some(v) = phi(&cand) {
                    if v <= phi0 + 0.25 * step * slope {
                        y = cand;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let gap = q as f64 / t;
        if gap <= tol {
            let value = objective(&y) + constant;
            return Ok(LiftOptimum { status: LiftStatus::Optimal, value, gap, newton_steps: steps });
        }
        t /= BARRIER_MU;
    }
    Err(LiftError::IterationLimit { iterations: steps, gap: q as f64 / t })
}
