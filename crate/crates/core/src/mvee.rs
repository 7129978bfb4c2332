//! Origin-centred minimum-volume enclosing ellipsoid and its John
//! decomposition.
//!
//! The ellipsoid `{x : xᵀ M x ≤ 1}` is found through the dual D-optimal
//! design problem: maximize `log det Λ(u)`, `Λ(u) = Σ u_i x_i x_iᵀ`, over the
//! probability simplex. At an optimum `M = (D Λ)^{-1}`, and the weights on
//! the contact points are exactly the John weights after the frame map
//! `y = M^{1/2} x`, because `M^{1/2} Λ M^{1/2} = I / D`.
//!
//! The solver is the centred Khachiyan / Frank–Wolfe ascent with Wolfe
//! away steps and drop steps, using closed-form line searches and rank-one
//! updates of `Λ^{-1}` and of the leverages `κ_i = x_iᵀ Λ^{-1} x_i`.

use crate::linalg::{self, Mat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Weights below this fraction of the largest weight are treated as zero.
pub const WEIGHT_FLOOR: f64 = 1e-10;

/// Relative rank threshold for the spanning check.
pub const SPAN_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MveeError {
    #[error("points do not span R^{dim} (numerical rank {rank}); project onto their span first")]
    DegenerateSpan { dim: usize, rank: usize },
    #[error("no convergence after {iterations} iterations (gap {gap:.3e})")]
    IterationLimit { iterations: usize, gap: f64, best: Box<MveeSolution> },
    #[error("John residual {residual:.3e} exceeds {limit:.3e}; ellipsoid is not converged")]
    ResidualTooLarge { residual: f64, limit: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// `E = {x : xᵀ M x ≤ 1}` with `M` symmetric positive definite.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CenteredEllipsoid {
    pub dim: usize,
    pub shape: Mat,
}

impl CenteredEllipsoid {
    pub fn new(shape: Mat) -> Result<Self, MveeError> {
        if !shape.is_square() {
            return Err(MveeError::InvalidInput("shape matrix must be square".into()));
        }
        let scale = shape.max_abs().max(1.0);
        if shape.asymmetry() > 1e-12 * scale {
            return Err(MveeError::InvalidInput("shape matrix is not symmetric".into()));
        }
        if linalg::min_eigenvalue(&shape) <= 0.0 {
            return Err(MveeError::InvalidInput("shape matrix is not positive definite".into()));
        }
        Ok(CenteredEllipsoid { dim: shape.rows(), shape })
    }

    /// `xᵀ M x`; at most 1 inside the ellipsoid.
    pub fn gauge_squared(&self, x: &[f64]) -> f64 {
        self.shape.quad_form(x)
    }

    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        self.gauge_squared(x) <= 1.0 + slack
    }

    /// `M^{1/2}`, mapping the ellipsoid onto the unit ball.
    pub fn frame(&self) -> Mat {
        linalg::sym_sqrt(&self.shape)
    }

    /// Eigenvalues of `M`, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigen(&self.shape).values
    }
}

/// Solver output: the ellipsoid together with the design weights.
#[derive(Clone, Debug)]
pub struct MveeSolution {
    pub ellipsoid: CenteredEllipsoid,
    /// One nonnegative weight per input point, summing to 1.
    pub weights: Vec<f64>,
    pub iterations: usize,
    /// `max_i κ_i / D - 1` at return.
    pub gap: f64,
}

impl MveeSolution {
    /// `max_i x_iᵀ Λ^{-1} x_i - D`, recomputed from the weights.
    pub fn duality_gap(&self, points: &[Vec<f64>]) -> f64 {
        let dim = self.ellipsoid.dim as f64;
        // M = (DΛ)^{-1}  ⇒  xᵀΛ^{-1}x = D · xᵀMx
        points
            .iter()
            .map(|x| dim * self.ellipsoid.gauge_squared(x))
            .fold(f64::NEG_INFINITY, f64::max)
            - dim
    }
}

fn moment_matrix(points: &[Vec<f64>], weights: &[f64], dim: usize) -> Mat {
    let mut lam = Mat::zeros(dim, dim);
    for (x, &w) in points.iter().zip(weights) {
        if w != 0.0 {
            lam.add_outer(w, x);
        }
    }
    lam
}

struct State {
    inv: Mat,
    kappa: Vec<f64>,
}

fn refresh(points: &[Vec<f64>], weights: &[f64], dim: usize) -> Option<State> {
    let lam = moment_matrix(points, weights, dim);
    let l = linalg::cholesky(&lam)?;
    let inv = linalg::cholesky_inverse(&l);
    let kappa = points.iter().map(|x| inv.quad_form(x)).collect();
    Some(State { inv, kappa })
}

/// Minimum-volume origin-centred ellipsoid containing `points`.
///
/// Stops once `max_i κ_i ≤ D (1 + gap_tol)` and every point carrying weight
/// above the floor has `κ_i ≥ D (1 - gap_tol)`.
pub fn mvee_centered(points: &[Vec<f64>], gap_tol: f64, max_iter: usize) -> Result<MveeSolution, MveeError> {
    let dim = points.first().map(Vec::len).ok_or_else(|| MveeError::InvalidInput("empty point set".into()))?;
    if points.iter().any(|p| p.len() != dim) {
        return Err(MveeError::InvalidInput("points have inconsistent dimensions".into()));
    }
    if !(gap_tol > 0.0) {
        return Err(MveeError::InvalidInput("gap_tol must be positive".into()));
    }
    let rank = linalg::numerical_rank(&Mat::from_rows(points), SPAN_RANK_TOL);
    if dim == 0 || rank < dim {
        return Err(MveeError::DegenerateSpan { dim, rank });
    }

    let n = points.len();
    let d = dim as f64;
    let mut u = vec![1.0 / n as f64; n];
    let mut state = refresh(points, &u, dim).ok_or(MveeError::DegenerateSpan { dim, rank })?;
    let mut iterations = 0;

    loop {
        if iterations % 64 == 0 && iterations > 0 {
            if let Some(s) = refresh(points, &u, dim) {
                state = s;
            }
        }
        let (j_max, k_max) = argmax(&state.kappa);
        let w_max = u.iter().fold(0.0, |m: f64, &w| m.max(w));
        let floor = WEIGHT_FLOOR * w_max;
        let (i_min, k_min) = u
            .iter()
            .zip(&state.kappa)
            .enumerate()
            .filter(|(_, (&w, _))| w > floor)
            .map(|(i, (_, &k))| (i, k))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("simplex weights have a positive entry");

        let up_gap = k_max / d - 1.0;
        let down_gap = 1.0 - k_min / d;
        if up_gap <= gap_tol && down_gap <= gap_tol {
            // confirm on freshly computed leverages before returning
            let fresh = refresh(points, &u, dim).ok_or(MveeError::DegenerateSpan { dim, rank })?;
            let (_, fresh_max) = argmax(&fresh.kappa);
            let fresh_min = u
                .iter()
                .zip(&fresh.kappa)
                .filter(|(&w, _)| w > floor)
                .map(|(_, &k)| k)
                .fold(f64::INFINITY, f64::min);
            if fresh_max / d - 1.0 <= gap_tol && 1.0 - fresh_min / d <= gap_tol {
                return Ok(finish(points, u, dim, iterations, fresh_max / d - 1.0));
            }
            state = fresh;
            continue;
        }
        if iterations >= max_iter {
            let gap = up_gap.max(down_gap);
            let best = finish(points, u, dim, iterations, up_gap);
            return Err(MveeError::IterationLimit { iterations, gap, best: Box::new(best) });
        }
        iterations += 1;

        // toward step on the most violated point, or away step off the
        // least useful support point, whichever promises more
        let (idx, kappa, tau) = if up_gap >= down_gap {
            (j_max, k_max, (k_max - d) / (d * (k_max - 1.0)))
        } else {
            let ui = u[i_min];
            let max_away = ui / (1.0 - ui);
            let tau = if k_min <= 1.0 || ui >= 1.0 {
                -max_away
            } else {
                ((k_min - d) / (d * (k_min - 1.0))).max(-max_away)
            };
            (i_min, k_min, tau)
        };
        if !tau.is_finite() || tau == 0.0 {
            // numerically stalled; resync and retry
            state = refresh(points, &u, dim).ok_or(MveeError::DegenerateSpan { dim, rank })?;
            continue;
        }

        // u ← (1-τ) u + τ e_idx, Λ ← (1-τ) Λ + τ x xᵀ
        let one_minus = 1.0 - tau;
        for w in u.iter_mut() {
            *w *= one_minus;
        }
        u[idx] += tau;
        if u[idx] <= 1e-15 * w_max {
            // drop step
            u[idx] = 0.0;
        }

        let w = state.inv.matvec(&points[idx]);
        let r = tau / one_minus;
        let denom = 1.0 + r * kappa;
        if denom <= 1e-12 {
            state = refresh(points, &u, dim).ok_or(MveeError::DegenerateSpan { dim, rank })?;
            continue;
        }
        let c = r / denom;
        state.inv.add_outer(-c, &w);
        state.inv = state.inv.scaled(1.0 / one_minus);
        for (kap, p) in state.kappa.iter_mut().zip(points) {
            let s = linalg::dot(p, &w);
            *kap = (*kap - c * s * s) / one_minus;
        }
    }
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
}

fn finish(points: &[Vec<f64>], u: Vec<f64>, dim: usize, iterations: usize, gap: f64) -> MveeSolution {
    let lam = moment_matrix(points, &u, dim);
    let l = linalg::cholesky(&lam).expect("moment matrix stays positive definite on spanning input");
    let mut shape = linalg::cholesky_inverse(&l).scaled(1.0 / dim as f64);
    shape.symmetrize();
    MveeSolution { ellipsoid: CenteredEllipsoid { dim, shape }, weights: u, iterations, gap }
}

/// Contact points with their John weights, in the unit-ball frame.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JohnDecomposition {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    /// `M^{1/2}`.
    pub frame: Mat,
    /// `‖Σ α y yᵀ - I/D‖_F` at extraction time.
    pub residual: f64,
}

impl JohnDecomposition {
    pub fn dim(&self) -> usize {
        self.frame.rows()
    }

    /// Contact points mapped into the unit-ball frame.
    pub fn framed_points(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.indices.iter().map(|&i| self.frame.matvec(&points[i])).collect()
    }
}

/// `Σ α y yᵀ - I/D`.
fn identity_defect(frame: &Mat, points: &[Vec<f64>], indices: &[usize], weights: &[f64]) -> Mat {
    let dim = frame.rows();
    let mut acc = Mat::identity(dim).scaled(-1.0 / dim as f64);
    for (&i, &a) in indices.iter().zip(weights) {
        let y = frame.matvec(&points[i]);
        acc.add_outer(a, &y);
    }
    acc
}

/// Keeps the points with weight above the floor, renormalizes, and checks
/// the identity `Σ α y yᵀ = I/D` against `10 · D · contact_tol`.
pub fn extract_john_decomposition(
    ellipsoid: &CenteredEllipsoid,
    points: &[Vec<f64>],
    weights: &[f64],
    contact_tol: f64,
) -> Result<JohnDecomposition, MveeError> {
    if weights.len() != points.len() {
        return Err(MveeError::InvalidInput("one weight per point required".into()));
    }
    let w_max = weights.iter().fold(0.0, |m: f64, &w| m.max(w));
    if !(w_max > 0.0) {
        return Err(MveeError::InvalidInput("weights are all zero".into()));
    }
    let floor = WEIGHT_FLOOR * w_max;
    let indices: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > floor).collect();
    let total: f64 = indices.iter().map(|&i| weights[i]).sum();
    let kept: Vec<f64> = indices.iter().map(|&i| weights[i] / total).collect();
    let frame = ellipsoid.frame();
    let residual = identity_defect(&frame, points, &indices, &kept).frobenius_norm();
    let limit = 10.0 * ellipsoid.dim as f64 * contact_tol;
    if residual > limit {
        return Err(MveeError::ResidualTooLarge { residual, limit });
    }
    Ok(JohnDecomposition { indices, weights: kept, frame, residual })
}

/// Residuals of a John decomposition, recomputed from scratch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JohnReport {
    /// `|Σ α - 1|`.
    pub weight_sum_error: f64,
    /// `‖Σ α y yᵀ - I/D‖_F`.
    pub identity_error: f64,
    /// `max |‖y‖² - 1|` over the listed contact points.
    pub max_contact_slack: f64,
    /// Most negative weight, or 0.
    pub min_weight: f64,
}

impl JohnReport {
    /// All residuals within `tol`; weights nonnegative.
    pub fn passes(&self, tol: f64) -> bool {
        self.weight_sum_error <= tol
            && self.identity_error <= tol
            && self.max_contact_slack <= tol
            && self.min_weight >= 0.0
    }
}

pub fn verify_john(dec: &JohnDecomposition, points: &[Vec<f64>]) -> JohnReport {
    let sum: f64 = dec.weights.iter().sum();
    let identity_error = identity_defect(&dec.frame, points, &dec.indices, &dec.weights).frobenius_norm();
    let max_contact_slack = dec
        .indices
        .iter()
        .map(|&i| {
            let y = dec.frame.matvec(&points[i]);
            (linalg::dot(&y, &y) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let min_weight = dec.weights.iter().fold(0.0, |m: f64, &w| m.min(w));
    JohnReport { weight_sum_error: (sum - 1.0).abs(), identity_error, max_contact_slack, min_weight }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cross2() -> Vec<Vec<f64>> {
        vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]
    }

    #[test]
    fn cross_polytope_gives_unit_disc() {
        let pts = cross2();
        let sol = mvee_centered(&pts, 1e-9, 10_000).unwrap();
        for ev in sol.ellipsoid.eigenvalues() {
            assert!((ev - 1.0).abs() < 1e-6);
        }
        for p in &pts {
            assert!((sol.ellipsoid.gauge_squared(p) - 1.0).abs() < 1e-6);
        }
        let dec = extract_john_decomposition(&sol.ellipsoid, &pts, &sol.weights, 1e-9).unwrap();
        assert_eq!(dec.indices, vec![0, 1, 2, 3]);
        for w in &dec.weights {
            assert!((w - 0.25).abs() < 1e-9);
        }
        assert!(dec.residual < 1e-12);
    }

    #[test]
    fn scaled_axes() {
        let pts = vec![vec![2.0, 0.0], vec![-2.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let sol = mvee_centered(&pts, 1e-9, 10_000).unwrap();
        let m = &sol.ellipsoid.shape;
        assert!((m[(0, 0)] - 0.25).abs() < 1e-6);
        assert!((m[(1, 1)] - 1.0).abs() < 1e-6);
        assert!(m[(0, 1)].abs() < 1e-6);
        let dec = extract_john_decomposition(&sol.ellipsoid, &pts, &sol.weights, 1e-9).unwrap();
        assert_eq!(dec.indices.len(), 4);
        let framed = dec.framed_points(&pts);
        for (y, want) in framed.iter().zip(cross2()) {
            for (a, b) in y.iter().zip(&want) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn interior_points_get_no_weight() {
        let mut pts = cross2();
        pts.push(vec![0.3, 0.2]);
        pts.push(vec![-0.1, 0.5]);
        let sol = mvee_centered(&pts, 1e-9, 10_000).unwrap();
        let dec = extract_john_decomposition(&sol.ellipsoid, &pts, &sol.weights, 1e-9).unwrap();
        assert_eq!(dec.indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn degenerate_span_is_rejected() {
        let pts = vec![vec![1.0, 1.0], vec![-2.0, -2.0]];
        assert!(matches!(mvee_centered(&pts, 1e-7, 100), Err(MveeError::DegenerateSpan { dim: 2, rank: 1 })));
    }

    #[test]
    fn iteration_limit_carries_best_iterate() {
        let pts = vec![vec![1.0, 0.1], vec![-0.3, 1.0], vec![0.7, -0.9], vec![-1.1, -0.2], vec![0.2, 0.4]];
        match mvee_centered(&pts, 1e-12, 1) {
            Err(MveeError::IterationLimit { best, iterations, .. }) => {
                assert_eq!(iterations, 1);
                assert_eq!(best.weights.len(), 5);
            }
            other => panic!("expected iteration limit, got {other:?}"),
        }
    }

    #[test]
    fn verify_exact_quarters() {
        let pts = cross2();
        let dec = JohnDecomposition {
            indices: vec![0, 1, 2, 3],
            weights: vec![0.25; 4],
            frame: Mat::identity(2),
            residual: 0.0,
        };
        let r = verify_john(&dec, &pts);
        assert_eq!(r.weight_sum_error, 0.0);
        assert_eq!(r.identity_error, 0.0);
        assert_eq!(r.max_contact_slack, 0.0);
        assert!(r.passes(1e-12));
    }

    #[test]
    fn verify_half_weights_on_one_axis() {
        let pts = cross2();
        let dec = JohnDecomposition {
            indices: vec![0, 1, 2, 3],
            weights: vec![0.5, 0.5, 0.0, 0.0],
            frame: Mat::identity(2),
            residual: 0.0,
        };
        let r = verify_john(&dec, &pts);
        // error matrix diag(1/2, -1/2)
        assert!((r.identity_error - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(!r.passes(1e-6));
    }

    #[test]
    fn verify_reports_weight_perturbation() {
        let pts = cross2();
        let dec = JohnDecomposition {
            indices: vec![0, 1, 2, 3],
            weights: vec![0.25 + 1e-3, 0.25, 0.25, 0.25],
            frame: Mat::identity(2),
            residual: 0.0,
        };
        let r = verify_john(&dec, &pts);
        assert!((r.weight_sum_error - 1e-3).abs() < 1e-15);
    }
}
