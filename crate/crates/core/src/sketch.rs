//! Point-subset sketches with a certified approximation factor.
//!
//! For a finite set `B ⊂ R^d` and a power `k`, every point is lifted to
//! `Sym(R^d)^{⊗k}`, the lifts are expressed in an orthonormal basis of
//! their span, and the John decomposition of the minimum-volume centred
//! ellipsoid of the lifted set is reduced by Carathéodory to at most
//! `1 + n(n+1)/2` contact points (`n` the span dimension). The surviving
//! points `X` satisfy, for every direction `y`,
//!
//! ```text
//! max_B |⟨y, x⟩| ≤ C(d+k-1, k)^{1/(2k)} · max_X |⟨y, x⟩|
//! ```

use crate::caratheodory::{self, CaratheodoryError, WeightedDecomposition};
use crate::linalg::{self, Mat};
use crate::mvee::{self, MveeError};
use crate::tensor::{self, SizingError, SymBasis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative drop threshold for the lifted-span basis.
pub const SPAN_DROP_TOL: f64 = 1e-10;

/// Iteration cap for the lifted ellipsoid solver.
pub const DEFAULT_MAX_ITER: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum SketchError {
    #[error("empty point set")]
    EmptyPointSet,
    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch { index: usize, got: usize, expected: usize },
    #[error("k must be positive")]
    ZeroPower,
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error(transparent)]
    Sizing(#[from] SizingError),
    #[error(transparent)]
    Mvee(#[from] MveeError),
    #[error(transparent)]
    Caratheodory(#[from] CaratheodoryError),
    #[error("sketch does not match the point set: {0}")]
    Mismatch(String),
    #[error("direction {index}: max over the sketch is 0 while max over the set is {max_over_set:.3e}")]
    DivisionDegenerate { index: usize, max_over_set: f64 },
}

/// A finite point set in `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, SketchError> {
        let dim = points.first().ok_or(SketchError::EmptyPointSet)?.len();
        let set = PointSet { dim, points, labels: None };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), SketchError> {
        if self.points.is_empty() {
            return Err(SketchError::EmptyPointSet);
        }
        for (index, p) in self.points.iter().enumerate() {
            if p.len() != self.dim {
                return Err(SketchError::DimensionMismatch { index, got: p.len(), expected: self.dim });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(SketchError::NonFinite { index });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A subset `X ⊆ B` with its certificate data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sketch {
    pub dim: usize,
    pub k: usize,
    pub num_points: usize,
    /// Indices of `X` into the source set, ascending.
    pub indices: Vec<usize>,
    /// John weights of the lifted contact points, aligned with `indices`.
    pub weights: Vec<f64>,
    pub factor_bound: f64,
    pub cardinality_bound: usize,
    /// `‖Σ α y yᵀ - I/n‖_F` over the reduced support.
    pub john_residual: f64,
    pub effective_dim: usize,
    pub lift_dim: usize,
    pub gap_tol: f64,
}

impl Sketch {
    /// `ε_num = 20 · gap_tol · D`, the slack allowed on the factor.
    pub fn numerical_slack(&self) -> f64 {
        20.0 * self.gap_tol * self.lift_dim as f64
    }
}

/// `C(d+k-1, k)^{1/(2k)}` from the exact binomial.
pub fn factor_bound(d: usize, k: usize) -> Result<f64, SizingError> {
    let big_d = tensor::lift_dim(d, k)?;
    Ok((big_d as f64).powf(1.0 / (2 * k) as f64))
}

/// `1 + D/2 + D²/2 = 1 + D(D+1)/2` with `D = C(d+k-1, k)`.
pub fn cardinality_bound(d: usize, k: usize) -> Result<usize, SizingError> {
    let big_d = tensor::lift_dim(d, k)?;
    big_d
        .checked_add(1)
        .and_then(|x| x.checked_mul(big_d))
        .map(|x| 1 + x / 2)
        .ok_or(SizingError { n: big_d, k: 2 })
}

/// Lifted points expressed in an orthonormal basis of their span.
#[derive(Clone, Debug)]
pub struct LiftedSpan {
    pub basis: Vec<Vec<f64>>,
    pub coords: Vec<Vec<f64>>,
    /// Largest `‖lift - proj(lift)‖ / ‖lift‖` over nonzero lifts.
    pub max_relative_residual: f64,
}

pub fn lifted_span(points: &PointSet, k: usize) -> Result<LiftedSpan, SketchError> {
    let basis_k = SymBasis::new(points.dim, k)?;
    let lifts: Vec<Vec<f64>> = points.points.iter().map(|x| basis_k.lift(x).coords).collect();
    let basis = linalg::orthonormal_basis(&lifts, SPAN_DROP_TOL);
    let coords: Vec<Vec<f64>> = lifts
        .iter()
        .map(|l| basis.iter().map(|q| linalg::dot(q, l)).collect())
        .collect();
    let mut max_relative_residual: f64 = 0.0;
    for (l, c) in lifts.iter().zip(&coords) {
        let ln = linalg::norm(l);
        if ln == 0.0 {
            continue;
        }
        let mut r = l.clone();
        for (q, &ci) in basis.iter().zip(c) {
            linalg::axpy(-ci, q, &mut r);
        }
        max_relative_residual = max_relative_residual.max(linalg::norm(&r) / ln);
    }
    Ok(LiftedSpan { basis, coords, max_relative_residual })
}

pub fn build_sketch(points: &PointSet, k: usize, gap_tol: f64) -> Result<Sketch, SketchError> {
    build_sketch_with(points, k, gap_tol, DEFAULT_MAX_ITER)
}

pub fn build_sketch_with(points: &PointSet, k: usize, gap_tol: f64, max_iter: usize) -> Result<Sketch, SketchError> {
    points.validate()?;
    if k == 0 {
        return Err(SketchError::ZeroPower);
    }
    let d = points.dim;
    let big_d = tensor::lift_dim(d, k)?;
    let factor_bound = factor_bound(d, k)?;
    let cardinality_bound = cardinality_bound(d, k)?;

    let span = lifted_span(points, k)?;
    let n = span.basis.len();
    if n == 0 {
        return Err(MveeError::DegenerateSpan { dim: big_d, rank: 0 }.into());
    }
    let sol = mvee::mvee_centered(&span.coords, gap_tol, max_iter)?;
    let john = mvee::extract_john_decomposition(&sol.ellipsoid, &span.coords, &sol.weights, gap_tol)?;

    let framed = john.framed_points(&span.coords);
    let vectors: Vec<Vec<f64>> = framed.iter().map(|y| caratheodory::flatten_outer(y)).collect();
    let target = caratheodory::flatten_symmetric(&Mat::identity(n).scaled(1.0 / n as f64));
    let dec = WeightedDecomposition {
        ids: john.indices.clone(),
        vectors,
        weights: john.weights.clone(),
        target,
    };
    // Carathéodory only runs when the contact support is over the bound;
    // it would otherwise merge antipodal contact points that share y yᵀ.
    let reduced = if dec.support() > dec.dim() + 1 {
        let budget = (10.0 * john.residual).max(1e-9);
        caratheodory::reduce(&dec, budget)?
    } else {
        dec
    };

    let mut pairs: Vec<(usize, f64)> = reduced.ids.iter().copied().zip(reduced.weights.iter().copied()).collect();
    pairs.sort_by_key(|p| p.0);
    let indices: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();

    let reduced_john = mvee::JohnDecomposition {
        indices: indices.clone(),
        weights: weights.clone(),
        frame: john.frame.clone(),
        residual: 0.0,
    };
    let john_residual = mvee::verify_john(&reduced_john, &span.coords).identity_error;

    Ok(Sketch {
        dim: d,
        k,
        num_points: points.len(),
        indices,
        weights,
        factor_bound,
        cardinality_bound,
        john_residual,
        effective_dim: n,
        lift_dim: big_d,
        gap_tol,
    })
}

/// Outcome of a Monte-Carlo check of the sketch guarantee.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchReport {
    pub n_dirs: usize,
    pub seed: u64,
    pub worst_ratio: f64,
    pub worst_index: Option<usize>,
    pub worst_direction: Option<Vec<f64>>,
    pub factor_bound: f64,
    /// Accepted ratio, `factor_bound · (1 + ε_num)`.
    pub threshold: f64,
    pub pass: bool,
}

/// Direction number `index` of the stream for `seed`: a standard normal
/// vector, normalized. Each direction depends only on `(seed, index)`.
pub fn sample_direction(seed: u64, index: u64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = linalg::norm(&v);
        if n > 1e-300 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn max_abs_projection<'a>(dir: &[f64], pts: impl Iterator<Item = &'a Vec<f64>>) -> f64 {
    pts.map(|p| linalg::dot(dir, p).abs()).fold(0.0, f64::max)
}

/// Ratio `max_B |⟨y,x⟩| / max_X |⟨y,x⟩|` for one direction, `0/0 = 1`.
pub fn direction_ratio(points: &PointSet, indices: &[usize], dir: &[f64]) -> Result<f64, f64> {
    let over_b = max_abs_projection(dir, points.points.iter());
    let over_x = max_abs_projection(dir, indices.iter().map(|&i| &points.points[i]));
    if over_x == 0.0 {
        if over_b == 0.0 {
            Ok(1.0)
        } else {
            Err(over_b)
        }
    } else {
        Ok(over_b / over_x)
    }
}

pub fn verify_sketch(points: &PointSet, sketch: &Sketch, n_dirs: usize, seed: u64) -> Result<SketchReport, SketchError> {
    points.validate()?;
    check_consistency(points, sketch)?;
    const CHUNK: usize = 4096;
    let chunks: Vec<(usize, usize)> = (0..n_dirs).step_by(CHUNK).map(|s| (s, (s + CHUNK).min(n_dirs))).collect();
    let per_chunk: Vec<Result<(f64, Option<usize>), SketchError>> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut best = (f64::NEG_INFINITY, None);
            for i in lo..hi {
                let dir = sample_direction(seed, i as u64, points.dim);
                let r = direction_ratio(points, &sketch.indices, &dir)
                    .map_err(|max_over_set| SketchError::DivisionDegenerate { index: i, max_over_set })?;
                if r > best.0 {
                    best = (r, Some(i));
                }
            }
            Ok(best)
        })
        .collect();
    // merge in index order; ties keep the earliest direction
    let mut worst = (1.0, None);
    for res in per_chunk {
        let (r, i) = res?;
        if r > worst.0 || (worst.1.is_none() && i.is_some() && r >= worst.0) {
            worst = (r, i);
        }
    }
    let threshold = sketch.factor_bound * (1.0 + sketch.numerical_slack());
    Ok(SketchReport {
        n_dirs,
        seed,
        worst_ratio: worst.0,
        worst_index: worst.1,
        worst_direction: worst.1.map(|i| sample_direction(seed, i as u64, points.dim)),
        factor_bound: sketch.factor_bound,
        threshold,
        pass: worst.0 <= threshold,
    })
}

/// Deterministic certificate recomputed from the points and the sketch.
///
/// With `S = Σ α x xᵀ` over the lifted points of `X` (span coordinates),
/// the ellipsoid `{z : zᵀ (n S)^{-1} z ≤ 1}` must contain every lifted
/// point of `B`, up to the numerical slack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchCertificate {
    pub weight_sum_error: f64,
    pub min_weight: f64,
    /// `max_B zᵀ (n S)^{-1} z`.
    pub max_gauge: f64,
    /// `min_X zᵀ (n S)^{-1} z`.
    pub min_contact_gauge: f64,
    pub slack: f64,
    pub pass: bool,
}

pub fn certify_sketch(points: &PointSet, sketch: &Sketch) -> Result<SketchCertificate, SketchError> {
    points.validate()?;
    check_consistency(points, sketch)?;
    if sketch.weights.len() != sketch.indices.len() {
        return Err(SketchError::Mismatch("one weight per index required".into()));
    }
    let span = lifted_span(points, sketch.k)?;
    let n = span.basis.len();
    if n != sketch.effective_dim {
        return Err(SketchError::Mismatch(format!("lifted span has dimension {n}, sketch records {}", sketch.effective_dim)));
    }
    let slack = sketch.numerical_slack();
    let weight_sum_error = (sketch.weights.iter().sum::<f64>() - 1.0).abs();
    let min_weight = sketch.weights.iter().fold(f64::INFINITY, |m, &w| m.min(w));
    let mut s = Mat::zeros(n, n);
    for (&i, &a) in sketch.indices.iter().zip(&sketch.weights) {
        s.add_outer(a * n as f64, &span.coords[i]);
    }
    let Some(l) = linalg::cholesky(&s) else {
        return Ok(SketchCertificate {
            weight_sum_error,
            min_weight,
            max_gauge: f64::INFINITY,
            min_contact_gauge: f64::INFINITY,
            slack,
            pass: false,
        });
    };
    let gauge = |z: &[f64]| {
        let w = linalg::cholesky_solve(&l, z);
        linalg::dot(z, &w)
    };
    let max_gauge = span.coords.par_iter().map(|z| gauge(z)).reduce(|| 0.0, f64::max);
    let min_contact_gauge = sketch.indices.iter().map(|&i| gauge(&span.coords[i])).fold(f64::INFINITY, f64::min);
    let pass = weight_sum_error <= slack && min_weight >= 0.0 && max_gauge <= 1.0 + slack;
    Ok(SketchCertificate { weight_sum_error, min_weight, max_gauge, min_contact_gauge, slack, pass })
}

/// Structural checks that need no sampling: indices in range, distinct,
/// within the cardinality bound, and bounds matching `(d, k)`.
pub fn check_consistency(points: &PointSet, sketch: &Sketch) -> Result<(), SketchError> {
    let bad = |m: &str| Err(SketchError::Mismatch(m.to_string()));
    if sketch.dim != points.dim {
        return bad("dimension differs");
    }
    if sketch.num_points != points.len() {
        return bad("point count differs");
    }
    if sketch.indices.iter().any(|&i| i >= points.len()) {
        return bad("index out of range");
    }
    if sketch.indices.windows(2).any(|w| w[0] >= w[1]) {
        return bad("indices not strictly ascending");
    }
    if sketch.indices.is_empty() {
        return bad("empty subset");
    }
    if sketch.k == 0 {
        return bad("k must be positive");
    }
    if sketch.factor_bound != factor_bound(sketch.dim, sketch.k)? {
        return bad("factor bound does not match (d, k)");
    }
    if sketch.cardinality_bound != cardinality_bound(sketch.dim, sketch.k)? {
        return bad("cardinality bound does not match (d, k)");
    }
    if sketch.indices.len() > sketch.cardinality_bound {
        return bad("subset exceeds the cardinality bound");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_polytope_k1_keeps_all_vertices() {
        let b = PointSet::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]).unwrap();
        let s = build_sketch(&b, 1, 1e-9).unwrap();
        assert_eq!(s.indices, vec![0, 1, 2, 3]);
        assert!((s.factor_bound - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.cardinality_bound, 4);
    }

    #[test]
    fn single_point() {
        let b = PointSet::new(vec![vec![0.3, -0.4, 1.0]]).unwrap();
        for k in 1..4 {
            let s = build_sketch(&b, k, 1e-9).unwrap();
            assert_eq!(s.indices, vec![0]);
            assert_eq!(s.effective_dim, 1);
            let r = verify_sketch(&b, &s, 200, 3).unwrap();
            assert_eq!(r.worst_ratio, 1.0);
            assert!(r.pass);
        }
    }

    #[test]
    fn all_zero_input_is_degenerate() {
        let b = PointSet::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(build_sketch(&b, 2, 1e-7), Err(SketchError::Mvee(MveeError::DegenerateSpan { .. }))));
    }

    #[test]
    fn zero_points_are_tolerated() {
        let b = PointSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let s = build_sketch(&b, 1, 1e-9).unwrap();
        assert_eq!(s.indices, vec![1, 2]);
    }

    #[test]
    fn subset_equal_to_set_has_ratio_one() {
        let b = PointSet::new(vec![vec![1.0, 2.0], vec![-0.5, 0.3], vec![0.2, -1.0]]).unwrap();
        let s = Sketch {
            dim: 2,
            k: 1,
            num_points: 3,
            indices: vec![0, 1, 2],
            weights: vec![1.0 / 3.0; 3],
            factor_bound: factor_bound(2, 1).unwrap(),
            cardinality_bound: cardinality_bound(2, 1).unwrap(),
            john_residual: 0.0,
            effective_dim: 2,
            lift_dim: 2,
            gap_tol: 1e-7,
        };
        let r = verify_sketch(&b, &s, 1000, 0).unwrap();
        assert_eq!(r.worst_ratio, 1.0);
    }

    #[test]
    fn signs_are_immaterial() {
        // B = {±e1, ±e2}, X = {e1, e2}: |⟨y, -e1⟩| = |⟨y, e1⟩|
        let b = PointSet::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]).unwrap();
        let mut s = build_sketch(&b, 1, 1e-9).unwrap();
        s.indices = vec![0, 2];
        let r = verify_sketch(&b, &s, 5000, 11).unwrap();
        assert_eq!(r.worst_ratio, 1.0);
    }

    #[test]
    fn degenerate_direction_surfaces() {
        let b = PointSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut s = build_sketch(&b, 1, 1e-9).unwrap();
        s.indices = vec![0];
        // e2 direction: max over X is 0, max over B is 1
        let dir = [0.0, 1.0];
        assert_eq!(direction_ratio(&b, &s.indices, &dir), Err(1.0));
    }

    #[test]
    fn directions_are_index_determined() {
        let a = sample_direction(7, 12345, 4);
        let b = sample_direction(7, 12345, 4);
        assert_eq!(a, b);
        assert!((linalg::norm(&a) - 1.0).abs() < 1e-15);
        assert_ne!(a, sample_direction(7, 12346, 4));
    }

    #[test]
    fn bounds_from_formulas() {
        assert_eq!(cardinality_bound(3, 2).unwrap(), 22);
        assert!((factor_bound(3, 2).unwrap() - 6f64.powf(0.25)).abs() < 1e-15);
        assert_eq!(cardinality_bound(2, 3).unwrap(), 11);
    }

    #[test]
    fn ragged_input_rejected() {
        assert!(matches!(
            PointSet::new(vec![vec![1.0, 0.0], vec![1.0]]),
            Err(SketchError::DimensionMismatch { index: 1, .. })
        ));
        assert!(matches!(PointSet::new(vec![]), Err(SketchError::EmptyPointSet)));
    }

    #[test]
    fn certificate_on_random_sphere() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..60)
            .map(|_| {
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let n = linalg::norm(&v);
                v.into_iter().map(|x| x / n).collect()
            })
            .collect();
        let b = PointSet::new(pts).unwrap();
        let s = build_sketch(&b, 2, 1e-7).unwrap();
        let c = certify_sketch(&b, &s).unwrap();
        assert!(c.pass, "{c:?}");
        assert!(c.min_contact_gauge > 1.0 - 1e-3);
        // dropping a contact point breaks containment
        let mut bad = s.clone();
        bad.indices.remove(0);
        let w = bad.weights.remove(0);
        bad.weights.iter_mut().for_each(|x| *x /= 1.0 - w);
        assert!(!certify_sketch(&b, &bad).unwrap().pass);
    }
}
