//! Symmetric tensor powers of `R^d` in compressed coordinates.
//!
//! The symmetric power `Sym(R^d)^{⊗k}` has one coordinate per degree-`k`
//! multi-index `α`. Storing `sqrt(k!/∏α_i!) · x^α` in that coordinate makes
//! the Euclidean inner product of two lifts equal `⟨x, y⟩^k`, exactly as
//! for the full `d^k`-entry tensor `x^{⊗k}`.
//!
//! Multi-indices are ordered graded reverse-lexicographically, largest
//! first: for `d = 3, k = 2` the order is
//! `x1², x1·x2, x2², x1·x3, x2·x3, x3²`.

use std::cmp::Ordering;
use thiserror::Error;

/// A requested size does not fit the platform's index range.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sizing error: binomial C({n}, {k}) does not fit in usize")]
pub struct SizingError {
    pub n: usize,
    pub k: usize,
}

/// `C(n, k)` by the multiplicative formula with 128-bit intermediates,
/// rejected when the result exceeds `usize`.
pub fn binomial(n: usize, k: usize) -> Result<usize, SizingError> {
    if k > n {
        return Ok(0);
    }
    let k_small = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k_small as u128 {
        // acc * (n - k_small + i) / i is exact at every step
        acc = acc
            .checked_mul(n as u128 - k_small as u128 + i)
            .ok_or(SizingError { n, k })?
            / i;
    }
    usize::try_from(acc).map_err(|_| SizingError { n, k })
}

/// Dimension `C(d+k-1, k)` of the symmetric `k`-th power of `R^d`.
pub fn lift_dim(d: usize, k: usize) -> Result<usize, SizingError> {
    if d == 0 {
        return Ok(usize::from(k == 0));
    }
    let n = (d - 1).checked_add(k).ok_or(SizingError { n: usize::MAX, k })?;
    binomial(n, k)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// `k! / ∏ α_i!` as a float.
    pub fn multinomial(&self) -> f64 {
        // product of binomials C(α_1+..+α_i, α_i), each exact in f64 here
        let mut total = 0u32;
        let mut acc = 1.0;
        for &a in &self.exponents {
            total += a;
            let mut b = 1.0;
            for i in 1..=a {
                b = b * f64::from(total - a + i) / f64::from(i);
            }
            acc *= b;
        }
        acc
    }

    /// `∏ x_i^{α_i}`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .fold(1.0, |acc, (&a, &xi)| acc * xi.powi(a as i32))
    }
}

/// Graded reverse-lexicographic comparison; `Less` means "comes first".
fn grevlex_first(a: &MultiIndex, b: &MultiIndex) -> Ordering {
    b.degree().cmp(&a.degree()).then_with(|| {
        for (x, y) in a.exponents.iter().zip(&b.exponents).rev() {
            match x.cmp(y) {
                Ordering::Equal => continue,
                other => return other,
            }
        }
        Ordering::Equal
    })
}

/// All degree-`k` multi-indices in `d` variables, in graded
/// reverse-lexicographic order (largest first).
pub fn enumerate_multi_indices(d: usize, k: usize) -> Result<Vec<MultiIndex>, SizingError> {
    let count = lift_dim(d, k)?;
    let mut out = Vec::with_capacity(count);
    let mut current = vec![0u32; d];
    fn fill(pos: usize, left: u32, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if pos + 1 == current.len() {
            current[pos] = left;
            out.push(MultiIndex::new(current.clone()));
            return;
        }
        for a in (0..=left).rev() {
            current[pos] = a;
            fill(pos + 1, left - a, current, out);
        }
    }
    if d > 0 {
        fill(0, k as u32, &mut current, &mut out);
    } else if k == 0 {
        out.push(MultiIndex::new(Vec::new()));
    }
    out.sort_by(grevlex_first);
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

/// A point of `Sym(R^d)^{⊗k}` in the weighted monomial coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SymLiftVector {
    pub d: usize,
    pub k: usize,
    pub coords: Vec<f64>,
}

impl SymLiftVector {
    pub fn dot(&self, other: &SymLiftVector) -> f64 {
        assert_eq!((self.d, self.k), (other.d, other.k), "lifts of different shape");
        crate::linalg::dot(&self.coords, &other.coords)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Precomputed basis for repeated lifts with the same `(d, k)`.
#[derive(Debug, Clone)]
pub struct SymBasis {
    d: usize,
    k: usize,
    indices: Vec<MultiIndex>,
    weights: Vec<f64>,
}

impl SymBasis {
    pub fn new(d: usize, k: usize) -> Result<Self, SizingError> {
        let indices = enumerate_multi_indices(d, k)?;
        let weights = indices.iter().map(|a| a.multinomial().sqrt()).collect();
        Ok(SymBasis { d, k, indices, weights })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn lift(&self, x: &[f64]) -> SymLiftVector {
        assert_eq!(x.len(), self.d, "point dimension mismatch");
        let coords = self
            .indices
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| w * a.monomial(x))
            .collect();
        SymLiftVector { d: self.d, k: self.k, coords }
    }
}

/// Lifts `x` to `Sym(R^d)^{⊗k}`.
pub fn sym_lift(x: &[f64], k: usize) -> Result<SymLiftVector, SizingError> {
    Ok(SymBasis::new(x.len(), k)?.lift(x))
}
