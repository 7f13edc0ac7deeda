//! Small dense symmetric solves used by the covariance algebra.

use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// First jitter tried when a Cholesky factorization fails, relative to the trace.
const JITTER_START: f64 = 1e-14;
const JITTER_GROWTH: f64 = 100.0;
const JITTER_MAX: f64 = 1e-6;
/// Relative residual accepted from the LU fallback.
const LU_RESIDUAL: f64 = 1e-10;

/// Solves `V a = b` for symmetric positive (semi)definite `V`.
///
/// Factorizes with Cholesky. An invertible indefinite `V` is solved by LU.
/// A singular one gets a diagonal jitter proportional to `tr(V)`, escalated
/// until factorization succeeds. Near-zero eigenvalues of message
/// covariances belong to eigenvectors nearly orthogonal to `1`, so the
/// jitter leaves `1ᵀ V⁻¹ 1` essentially unchanged.
pub fn solve_sym(v: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = v.nrows();
    if v.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: v.ncols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            stage: "covariance",
        });
    }
    if let Some(ch) = Cholesky::new(v.clone()) {
        return Ok(ch.solve(b));
    }
    // Indefinite but invertible (estimated covariances at small N).
    if let Some(x) = v.clone().lu().solve(b) {
        let resid = (v * &x - b).norm();
        if x.iter().all(|e| e.is_finite()) && resid <= LU_RESIDUAL * b.norm() {
            return Ok(x);
        }
    }
    let trace = v.trace().abs().max(f64::MIN_POSITIVE);
    let mut rel = JITTER_START;
    while rel <= JITTER_MAX {
        let mut jittered = v.clone();
        for i in 0..n {
            jittered[(i, i)] += rel * trace;
        }
        if let Some(ch) = Cholesky::new(jittered) {
            return Ok(ch.solve(b));
        }
        rel *= JITTER_GROWTH;
    }
    Err(Error::CovarianceCorrupted(f64::NAN))
}

/// `V⁻¹ 1`.
pub fn solve_ones(v: &DMatrix<f64>) -> Result<DVector<f64>> {
    solve_sym(v, &DVector::from_element(v.nrows(), 1.0))
}

/// Extracts the block with rows `rows` and columns `cols`.
pub fn submatrix(v: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| v[(rows[i], cols[j])])
}

/// Index list `0..n`.
pub fn range(n: usize) -> Vec<usize> {
    (0..n).collect()
}
