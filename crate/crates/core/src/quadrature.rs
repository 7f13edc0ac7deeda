//! Gauss quadrature rules built with the Golub–Welsch eigenvalue method.

use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights of a Gauss rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss–Hermite rule for expectations over a standard normal variable:
    /// `E[g(Z)] ≈ Σ w_i g(z_i)` with `Z ~ N(0, 1)`. Weights sum to one.
    pub fn hermite(order: usize) -> Self {
        // Probabilists' Hermite recurrence: off-diagonal sqrt(k).
        let jacobi = DMatrix::from_fn(order, order, |i, j| {
            if i + 1 == j || j + 1 == i {
                libm::sqrt(i.max(j) as f64)
            } else {
                0.0
            }
        });
        Self::from_jacobi(jacobi, 1.0)
    }

    /// Gauss–Legendre rule on `[-1, 1]`. Weights sum to two.
    pub fn legendre(order: usize) -> Self {
        let jacobi = DMatrix::from_fn(order, order, |i, j| {
            if i + 1 == j || j + 1 == i {
                let k = i.max(j) as f64;
                k / libm::sqrt(4.0 * k * k - 1.0)
            } else {
                0.0
            }
        });
        Self::from_jacobi(jacobi, 2.0)
    }

    fn from_jacobi(jacobi: DMatrix<f64>, total_mass: f64) -> Self {
        let n = jacobi.nrows();
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let v0 = eig.eigenvectors[(0, k)];
                (eig.eigenvalues[k], total_mass * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Symmetrize: the rules are symmetric about zero.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (pairs[j].0 - pairs[i].0);
            let w = 0.5 * (pairs[i].1 + pairs[j].1);
            pairs[i] = (-x, w);
            pairs[j] = (x, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        GaussRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]` with the Legendre rule mapped to the panel.
    pub fn integrate_panel<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Integrates `f` over consecutive panels delimited by `breaks` (sorted).
    pub fn integrate_composite<F: FnMut(f64) -> f64>(&self, breaks: &[f64], mut f: F) -> f64 {
        breaks
            .windows(2)
            .map(|w| self.integrate_panel(w[0], w[1], &mut f))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let rule = GaussRule::hermite(63);
        let m = |p: i32| -> f64 {
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * libm::pow(*x, p as f64))
                .sum()
        };
        assert!((m(0) - 1.0).abs() < 1e-13);
        assert!(m(1).abs() < 1e-13);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
        assert!((m(6) - 15.0).abs() < 1e-10);
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = GaussRule::legendre(20);
        let v = rule.integrate_panel(0.0, 2.0, |x| x * x * x + 1.0);
        assert!((v - 6.0).abs() < 1e-13);
        let e = rule.integrate_composite(&[0.0, 0.5, 1.0], libm::exp);
        assert!((e - (core::f64::consts::E - 1.0)).abs() < 1e-14);
    }
}
