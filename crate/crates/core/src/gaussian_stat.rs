//! Covariance algebra for correlated Gaussian messages.
//!
//! Messages `X_τ = x + W_τ` share the signal and carry correlated Gaussian
//! errors with covariance `V`. The minimum-variance unbiased combination is
//! `X V⁻¹1 / (1ᵀV⁻¹1)` with error variance `1 / (1ᵀV⁻¹1)`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{solve_ones, submatrix};

/// Default threshold of the 2×2 minor test in [`psd_guard`].
pub const PSD_GUARD_EPS: f64 = 1e-6;

/// Growable symmetric matrix of message covariances `v_{τ',τ}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CovarianceLedger {
    entries: Vec<Vec<f64>>,
}

impl CovarianceLedger {
    pub fn new() -> Self {
        CovarianceLedger {
            entries: Vec::new(),
        }
    }

    /// Ledger with a single variance `v00`.
    pub fn with_initial(v00: f64) -> Self {
        CovarianceLedger {
            entries: vec![vec![v00]],
        }
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: m.ncols(),
            });
        }
        let mut ledger = Self::new();
        for t in 0..n {
            let row: Vec<f64> = (0..=t).map(|i| m[(i, t)]).collect();
            ledger.push(&row)?;
        }
        Ok(ledger)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends a new index whose covariances with indices `0..=len` are
    /// `row` (the last entry is the new variance).
    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        let n = self.len();
        if row.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                actual: row.len(),
            });
        }
        self.entries.push(row.to_vec());
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.entries[hi][lo]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.entries[hi][lo] = value;
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.entries[i][i]
    }

    pub fn last_diag(&self) -> Option<f64> {
        self.entries.last().map(|r| r[r.len() - 1])
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    /// Applies [`psd_guard`] in place and returns the number of replaced pairs.
    pub fn guard(&mut self, eps: f64) -> usize {
        let n = self.len();
        let mut replaced = 0;
        for tau in 1..n {
            let v_tt = self.entries[tau][tau];
            for tau_p in 0..tau {
                let v_pp = self.entries[tau_p][tau_p];
                let c = self.entries[tau][tau_p];
                let nested = v_pp.min(v_tt);
                if v_pp * v_tt - c * c < eps && c != nested {
                    self.entries[tau][tau_p] = nested;
                    replaced += 1;
                }
            }
        }
        replaced
    }
}

/// Replaces `v_{τ',τ}` (both triangles) by the later variance `v_{τ,τ}`
/// whenever `v_{τ',τ'} v_{τ,τ} − v_{τ',τ}² < eps`. If the later variance is
/// the larger one, the earlier variance is used instead so that the pair
/// stays positive semidefinite. Pairs are scanned in
/// increasing `(τ', τ)` order; the operation is idempotent.
pub fn psd_guard(ledger: &CovarianceLedger, eps: f64) -> CovarianceLedger {
    let mut out = ledger.clone();
    out.guard(eps);
    out
}

/// Sufficient statistic of correlated messages.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStatistic {
    pub mean: Vec<f64>,
    pub variance: f64,
    /// `V⁻¹1 / (1ᵀV⁻¹1)`; sums to one.
    pub weights: Vec<f64>,
}

/// Combination weights `V⁻¹1 / (1ᵀV⁻¹1)` and variance `1 / (1ᵀV⁻¹1)`.
pub fn combine_weights(v: &DMatrix<f64>) -> Result<(Vec<f64>, f64)> {
    if v.nrows() == 0 {
        return Err(Error::invalid("V", "at least one message is required"));
    }
    let a = solve_ones(v)?;
    let total: f64 = a.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::CovarianceCorrupted(total));
    }
    Ok((a.iter().map(|x| x / total).collect(), 1.0 / total))
}

/// Sufficient statistic of the columns `messages[k]` with covariance `v`.
pub fn combine(messages: &[&[f64]], v: &DMatrix<f64>) -> Result<SufficientStatistic> {
    let k = messages.len();
    if v.nrows() != k || v.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: v.nrows(),
        });
    }
    let n = messages.first().map_or(0, |m| m.len());
    if let Some(bad) = messages.iter().find(|m| m.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    let (weights, variance) = combine_weights(v)?;
    Ok(SufficientStatistic {
        mean: weighted_sum(messages, &weights),
        variance,
        weights,
    })
}

/// `Σ_k weights[k] messages[k]`.
pub fn weighted_sum(messages: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    let n = messages.first().map_or(0, |m| m.len());
    let mut out = vec![0.0; n];
    for (m, &w) in messages.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (o, x) in out.iter_mut().zip(m.iter()) {
            *o += w * x;
        }
    }
    out
}

/// `1ᵀV_L⁻¹ V_block V_R⁻¹1 / (1ᵀV_L⁻¹1 · 1ᵀV_R⁻¹1)`: the error covariance of
/// two sufficient statistics built from overlapping message sets.
pub fn cross_covariance(
    v_block: &DMatrix<f64>,
    v_left: &DMatrix<f64>,
    v_right: &DMatrix<f64>,
) -> Result<f64> {
    if v_block.nrows() != v_left.nrows() {
        return Err(Error::DimensionMismatch {
            expected: v_left.nrows(),
            actual: v_block.nrows(),
        });
    }
    if v_block.ncols() != v_right.nrows() {
        return Err(Error::DimensionMismatch {
            expected: v_right.nrows(),
            actual: v_block.ncols(),
        });
    }
    let (wl, _) = combine_weights(v_left)?;
    let (wr, _) = combine_weights(v_right)?;
    Ok(weighted_cross(&wl, v_block, &wr))
}

/// `a_Lᵀ V_block a_R` for normalized weights.
pub fn weighted_cross(w_left: &[f64], v_block: &DMatrix<f64>, w_right: &[f64]) -> f64 {
    let l = DVector::from_column_slice(w_left);
    let r = DVector::from_column_slice(w_right);
    l.dot(&(v_block * r))
}

/// Upper-triangular damping matrix `Θ` with columns `θ_{·,t}` for
/// geometric damping with factor `theta`: `θ_{0,t} = (1−θ)^t` and
/// `θ_{τ,t} = θ(1−θ)^{t−τ}` for `1 ≤ τ ≤ t`.
pub fn geometric_damping(theta: f64, size: usize) -> Result<DMatrix<f64>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::invalid("theta", "damping factor must lie in (0, 1]"));
    }
    let mut m = DMatrix::zeros(size, size);
    for t in 0..size {
        let col = geometric_column(theta, t);
        for (tau, w) in col.into_iter().enumerate() {
            m[(tau, t)] = w;
        }
    }
    Ok(m)
}

/// Column `(θ_{0,t}, …, θ_{t,t})` of [`geometric_damping`].
pub fn geometric_column(theta: f64, t: usize) -> Vec<f64> {
    let keep = 1.0 - theta;
    (0..=t)
        .map(|tau| {
            if tau == 0 {
                libm::pow(keep, t as f64)
            } else {
                theta * libm::pow(keep, (t - tau) as f64)
            }
        })
        .collect()
}

/// `V = Θᵀ C Θ` for an upper-triangular `Θ` with unit column sums.
pub fn damping_covariance(c: &DMatrix<f64>, theta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = c.nrows();
    if c.ncols() != n || theta.nrows() != n || theta.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: theta.nrows(),
        });
    }
    for t in 0..n {
        if theta[(t, t)] == 0.0 {
            return Err(Error::RankDeficientDamping(t));
        }
        let sum: f64 = theta.column(t).iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("theta", "damping columns must sum to one"));
        }
        if (t + 1..n).any(|i| theta[(i, t)] != 0.0) {
            return Err(Error::invalid(
                "theta",
                "damping matrix must be upper triangular",
            ));
        }
    }
    Ok(theta.transpose() * c * theta)
}

/// Extracts `V[rows, cols]` from a square matrix.
pub fn block(v: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    submatrix(v, rows, cols)
}
