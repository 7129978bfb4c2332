//! Carathéodory support reduction for convex decompositions.
//!
//! Given `Σ α_i m_i = target` with `α` on the simplex and `m_i ∈ R^n`, the
//! reduction repeatedly finds an affine dependence `λ` among `n + 2`
//! supported columns `[m_i; 1]` and slides the weights along `±λ` until one
//! of them reaches zero. Both `Σ α_i m_i` and `Σ α_i` are unchanged by each
//! move, and the support shrinks by one until at most `n + 1` terms remain.

use crate::linalg::{self, Mat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative threshold for the column-pivoted kernel solve.
pub const KERNEL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CaratheodoryError {
    #[error("no affine dependence found among {support} supported vectors in R^{dim}")]
    NumericalBreakdown { support: usize, dim: usize, partial: Box<WeightedDecomposition> },
    #[error("reduction drifted by {drift:.3e}, over the budget {budget:.3e}")]
    BudgetExceeded { drift: f64, budget: f64, partial: Box<WeightedDecomposition> },
    #[error("invalid decomposition: {0}")]
    InvalidInput(String),
}

/// `Σ α_i m_i = target`, `Σ α_i = 1`, `α ≥ 0`.
///
/// `ids[i]` names the original item behind `vectors[i]`, so reductions
/// can be traced back to the caller's indexing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedDecomposition {
    pub ids: Vec<usize>,
    pub vectors: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub target: Vec<f64>,
}

impl WeightedDecomposition {
    /// Ids default to `0..vectors.len()`.
    pub fn new(vectors: Vec<Vec<f64>>, weights: Vec<f64>, target: Vec<f64>) -> Self {
        let ids = (0..vectors.len()).collect();
        WeightedDecomposition { ids, vectors, weights, target }
    }

    pub fn support(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    pub fn combination(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim()];
        for (v, &a) in self.vectors.iter().zip(&self.weights) {
            linalg::axpy(a, v, &mut acc);
        }
        acc
    }

    /// `‖Σ α m - target‖∞`.
    pub fn target_residual(&self) -> f64 {
        self.combination()
            .iter()
            .zip(&self.target)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `|Σ α - 1|`.
    pub fn weight_residual(&self) -> f64 {
        (self.weights.iter().sum::<f64>() - 1.0).abs()
    }

    fn validate(&self) -> Result<(), CaratheodoryError> {
        let n = self.dim();
        if self.vectors.len() != self.weights.len() || self.ids.len() != self.weights.len() {
            return Err(CaratheodoryError::InvalidInput("ids, vectors and weights differ in length".into()));
        }
        if self.vectors.iter().any(|v| v.len() != n) {
            return Err(CaratheodoryError::InvalidInput("vector length differs from target length".into()));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(CaratheodoryError::InvalidInput("weights must be nonnegative".into()));
        }
        Ok(())
    }

    fn remove(&mut self, i: usize) {
        self.ids.remove(i);
        self.vectors.remove(i);
        self.weights.remove(i);
    }
}

/// Flattens a symmetric matrix to its `D(D+1)/2` upper-triangular entries,
/// scaling off-diagonal entries by `√2` so that Euclidean and Frobenius
/// inner products agree.
pub fn flatten_symmetric(m: &Mat) -> Vec<f64> {
    let d = m.rows();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        out.push(m[(i, i)]);
        for j in (i + 1)..d {
            out.push(std::f64::consts::SQRT_2 * m[(i, j)]);
        }
    }
    out
}

/// Flattened `y yᵀ` without forming the matrix.
pub fn flatten_outer(y: &[f64]) -> Vec<f64> {
    let d = y.len();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        out.push(y[i] * y[i]);
        for j in (i + 1)..d {
            out.push(std::f64::consts::SQRT_2 * y[i] * y[j]);
        }
    }
    out
}

/// Reduces the support of `dec` to at most `n + 1` vectors.
pub fn reduce(dec: &WeightedDecomposition, residual_budget: f64) -> Result<WeightedDecomposition, CaratheodoryError> {
    dec.validate()?;
    let n = dec.dim();
    let mut cur = dec.clone();
    // exact duplicates merge into their first occurrence
    let mut i = 0;
    while i < cur.support() {
        let mut j = i + 1;
        while j < cur.support() {
            if cur.vectors[j] == cur.vectors[i] {
                cur.weights[i] += cur.weights[j];
                cur.remove(j);
            } else {
                j += 1;
            }
        }
        i += 1;
    }
    // exact zeros carry no information
    let mut i = 0;
    while i < cur.support() {
        if cur.weights[i] == 0.0 && cur.support() > 1 {
            cur.remove(i);
        } else {
            i += 1;
        }
    }
    let start_target = dec.target_residual();
    let start_weight = dec.weight_residual();

    while cur.support() > n + 1 {
        let block = n + 2;
        let mut a = Mat::zeros(n + 1, block);
        for c in 0..block {
            for r in 0..n {
                a[(r, c)] = cur.vectors[c][r];
            }
            a[(n, c)] = 1.0;
        }
        let Some(lambda) = linalg::kernel_vector(&a, KERNEL_TOL) else {
            return Err(CaratheodoryError::NumericalBreakdown {
                support: cur.support(),
                dim: n,
                partial: Box::new(cur),
            });
        };
        // α ← α - t λ (t > 0) zeroes some λ_i > 0; α ← α + t λ zeroes some λ_i < 0
        let down = min_ratio(&cur.weights[..block], &lambda, 1.0);
        let up = min_ratio(&cur.weights[..block], &lambda, -1.0);
        let (sign, t, hit) = match (down, up) {
            (Some((t1, i1)), Some((t2, i2))) => {
                if t2 < t1 {
                    (-1.0, t2, i2)
                } else {
                    (1.0, t1, i1)
                }
            }
            (Some((t1, i1)), None) => (1.0, t1, i1),
            (None, Some((t2, i2))) => (-1.0, t2, i2),
            (None, None) => {
                return Err(CaratheodoryError::NumericalBreakdown {
                    support: cur.support(),
                    dim: n,
                    partial: Box::new(cur),
                })
            }
        };
        for (w, l) in cur.weights[..block].iter_mut().zip(&lambda) {
            *w = (*w - sign * t * l).max(0.0);
        }
        cur.weights[hit] = 0.0;
        cur.remove(hit);
    }

    let drift = (cur.target_residual() - start_target).max(cur.weight_residual() - start_weight).max(0.0);
    if drift > residual_budget {
        return Err(CaratheodoryError::BudgetExceeded { drift, budget: residual_budget, partial: Box::new(cur) });
    }
    Ok(cur)
}

/// Smallest `α_i / (s λ_i)` over `s λ_i > 0`, ties broken by lowest index.
fn min_ratio(weights: &[f64], lambda: &[f64], s: f64) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, (&w, &l)) in weights.iter().zip(lambda).enumerate() {
        let l = s * l;
        if l > 0.0 {
            let t = w / l;
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, i));
            }
        }
    }
    best
}
