//! Measurement model `y = A x + w` with geometric singular values, a
//! row-permuted Hadamard right-singular basis and Bernoulli-Gaussian signals.
//!
//! The sensing matrix is `A = Σ Vᵀ` where `Vᵀ = P H D / √N`: `H` is the
//! Sylvester Hadamard matrix, `P` a uniformly random row permutation and `D`
//! an optional random ±1 diagonal (off by default). Only the first `M`
//! permuted rows carry nonzero singular values.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fwht::fwht;

/// Descending singular values `σ_0 ≥ … ≥ σ_{M-1} > 0` of an `M × N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    singular_values: Vec<f64>,
    n: usize,
}

/// Geometric singular values with condition number `kappa` and unit moment
/// `N⁻¹ Σ σ_m² = 1`.
///
/// `σ_m / σ_{m-1} = κ^{-1/(M-1)}` and
/// `σ_0² = N (1 − κ^{-2/(M-1)}) / (1 − κ^{-2M/(M-1)})`; `κ = 1` is the
/// analytic limit `σ_m = √(N/M)`.
pub fn synth_singular_values(m: usize, n: usize, kappa: f64) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::invalid(
            "m",
            "at least two measurements are required",
        ));
    }
    if n < m {
        return Err(Error::invalid("n", "signal dimension must be at least m"));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::invalid(
            "kappa",
            "condition number must be finite and >= 1",
        ));
    }
    if kappa == 1.0 {
        return Ok(vec![libm::sqrt(n as f64 / m as f64); m]);
    }
    let log_kappa = libm::log(kappa);
    let steps = (m - 1) as f64;
    // 1 − κ^{-2/(M-1)} and 1 − κ^{-2M/(M-1)} without cancellation.
    let num = -libm::expm1(-2.0 * log_kappa / steps);
    let den = -libm::expm1(-2.0 * (m as f64) * log_kappa / steps);
    let s0 = libm::sqrt(n as f64 * num / den);
    Ok((0..m)
        .map(|i| s0 * libm::exp(-(i as f64) * log_kappa / steps))
        .collect())
}

impl SpectralProfile {
    /// Geometric profile; see [`synth_singular_values`].
    pub fn geometric(m: usize, n: usize, kappa: f64) -> Result<Self> {
        Ok(SpectralProfile {
            singular_values: synth_singular_values(m, n, kappa)?,
            n,
        })
    }

    /// Wraps explicit singular values (descending, positive, at most `n`).
    pub fn from_singular_values(n: usize, singular_values: Vec<f64>) -> Result<Self> {
        if singular_values.is_empty() || singular_values.len() > n {
            return Err(Error::invalid(
                "singular_values",
                "need between 1 and n values",
            ));
        }
        if singular_values
            .iter()
            .any(|s| !(*s > 0.0) || !s.is_finite())
        {
            return Err(Error::invalid(
                "singular_values",
                "values must be positive and finite",
            ));
        }
        if singular_values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid(
                "singular_values",
                "values must be descending",
            ));
        }
        Ok(SpectralProfile { singular_values, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.singular_values.len()
    }

    pub fn delta(&self) -> f64 {
        self.m() as f64 / self.n as f64
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// `σ_0 / σ_{M-1}`.
    pub fn kappa(&self) -> f64 {
        self.singular_values[0] / self.singular_values[self.m() - 1]
    }

    /// `N⁻¹ Σ σ_m²`.
    pub fn second_moment(&self) -> f64 {
        self.singular_values.iter().map(|s| s * s).sum::<f64>() / self.n as f64
    }

    /// Empirical η-transform `N⁻¹ Tr{(I + x AᵀA)⁻¹}`.
    pub fn eta(&self, x: f64) -> f64 {
        let zeros = (self.n - self.m()) as f64;
        let s: f64 = self
            .singular_values
            .iter()
            .map(|sv| 1.0 / (1.0 + x * sv * sv))
            .sum();
        (zeros + s) / self.n as f64
    }
}

/// Matrix-free `A = Σ Vᵀ` with `Vᵀ = P H D / √N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingOperator {
    profile: SpectralProfile,
    /// Row `k` of `Vᵀ` is Hadamard row `row_permutation[k]`.
    row_permutation: Vec<usize>,
    sign_diagonal: Option<Vec<f64>>,
}

impl SensingOperator {
    pub fn new(
        profile: SpectralProfile,
        row_permutation: Vec<usize>,
        sign_diagonal: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = profile.n();
        if !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        if row_permutation.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: row_permutation.len(),
            });
        }
        let mut seen = vec![false; n];
        for &r in &row_permutation {
            if r >= n || seen[r] {
                return Err(Error::invalid(
                    "row_permutation",
                    "not a permutation of 0..N",
                ));
            }
            seen[r] = true;
        }
        if let Some(signs) = &sign_diagonal {
            if signs.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: signs.len(),
                });
            }
            if signs.iter().any(|s| *s != 1.0 && *s != -1.0) {
                return Err(Error::invalid("sign_diagonal", "entries must be ±1"));
            }
        }
        Ok(SensingOperator {
            profile,
            row_permutation,
            sign_diagonal,
        })
    }

    /// Uniform random row permutation and, optionally, random signs.
    pub fn random<R: Rng + ?Sized>(
        profile: SpectralProfile,
        permutation_rng: &mut R,
        sign_rng: Option<&mut R>,
    ) -> Result<Self> {
        let n = profile.n();
        if !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(permutation_rng);
        let signs = sign_rng.map(|rng| {
            (0..n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect()
        });
        Self::new(profile, perm, signs)
    }

    pub fn profile(&self) -> &SpectralProfile {
        &self.profile
    }

    pub fn n(&self) -> usize {
        self.profile.n()
    }

    pub fn m(&self) -> usize {
        self.profile.m()
    }

    pub fn row_permutation(&self) -> &[usize] {
        &self.row_permutation
    }

    pub fn sign_diagonal(&self) -> Option<&[f64]> {
        self.sign_diagonal.as_deref()
    }

    fn check_len(&self, got: usize, expected: usize) -> Result<()> {
        if got != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: got,
            });
        }
        Ok(())
    }

    /// `Vᵀ v` (length N).
    pub fn apply_vt(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        self.check_len(v.len(), n)?;
        let mut buf = v.to_vec();
        if let Some(signs) = &self.sign_diagonal {
            buf.iter_mut().zip(signs).for_each(|(b, s)| *b *= s);
        }
        fwht(&mut buf);
        let scale = 1.0 / libm::sqrt(n as f64);
        Ok(self
            .row_permutation
            .iter()
            .map(|&r| buf[r] * scale)
            .collect())
    }

    /// `V z` (length N).
    pub fn apply_v(&self, z: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        self.check_len(z.len(), n)?;
        let mut buf = vec![0.0; n];
        for (k, &r) in self.row_permutation.iter().enumerate() {
            buf[r] = z[k];
        }
        fwht(&mut buf);
        let scale = 1.0 / libm::sqrt(n as f64);
        buf.iter_mut().for_each(|b| *b *= scale);
        if let Some(signs) = &self.sign_diagonal {
            buf.iter_mut().zip(signs).for_each(|(b, s)| *b *= s);
        }
        Ok(buf)
    }

    /// `A v` (length M).
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let vt = self.apply_vt(v)?;
        Ok(self
            .profile
            .singular_values()
            .iter()
            .zip(&vt)
            .map(|(s, x)| s * x)
            .collect())
    }

    /// `Aᵀ u` (length N).
    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.adjoint_diag(self.profile.singular_values(), u)
    }

    /// `Wᵀ u` for a filter `W = diag(d) Vᵀ` sharing the singular vectors of `A`.
    pub fn adjoint_diag(&self, diag: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        let m = self.m();
        self.check_len(u.len(), m)?;
        self.check_len(diag.len(), m)?;
        let mut z = vec![0.0; self.n()];
        for k in 0..m {
            z[k] = diag[k] * u[k];
        }
        self.apply_v(&z)
    }
}

/// Dimensions and signal/noise parameters of one problem family.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub n: usize,
    pub m: usize,
    pub rho: f64,
    pub kappa: f64,
    pub snr_db: f64,
    /// Random ±1 diagonal before the Hadamard transform.
    pub sign_randomization: bool,
}

impl ProblemConfig {
    /// Noise variance `σ² = 10^{-SNR/10}`.
    pub fn sigma2(&self) -> f64 {
        libm::pow(10.0, -self.snr_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.n));
        }
        if self.m < 2 || self.m > self.n {
            return Err(Error::invalid("m", "need 2 <= m <= n"));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::invalid("rho", "density must lie in (0, 1]"));
        }
        if !(self.kappa >= 1.0) || !self.kappa.is_finite() {
            return Err(Error::invalid(
                "kappa",
                "condition number must be finite and >= 1",
            ));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::invalid("snr_db", "must be finite"));
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<SpectralProfile> {
        SpectralProfile::geometric(self.m, self.n, self.kappa)
    }
}

/// Independent random streams derived from one trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Permutation = 0,
    Signs = 1,
    Signal = 2,
    Noise = 3,
}

/// ChaCha generator for `stream` of the trial seeded with `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// One realization of the measurement model.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub sigma2: f64,
    pub rho: f64,
    pub operator: SensingOperator,
}

impl ProblemInstance {
    /// Builds `y = A x + w` for given parts.
    pub fn from_parts(
        operator: SensingOperator,
        x: Vec<f64>,
        w: Vec<f64>,
        sigma2: f64,
        rho: f64,
    ) -> Result<Self> {
        if w.len() != operator.m() {
            return Err(Error::DimensionMismatch {
                expected: operator.m(),
                actual: w.len(),
            });
        }
        let ax = operator.apply(&x)?;
        let y = ax.iter().zip(&w).map(|(a, b)| a + b).collect();
        Ok(ProblemInstance {
            x,
            y,
            w,
            sigma2,
            rho,
            operator,
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// `N⁻¹ ‖x̂ − x‖²`.
    pub fn mse(&self, estimate: &[f64]) -> f64 {
        self.x
            .iter()
            .zip(estimate)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / self.n() as f64
    }
}

/// Samples a Bernoulli-Gaussian vector: `N(0, 1/ρ)` with probability `ρ`, else 0.
pub fn sample_bg<R: Rng + ?Sized>(n: usize, rho: f64, rng: &mut R) -> Vec<f64> {
    let sd = libm::sqrt(1.0 / rho);
    (0..n)
        .map(|_| {
            let active = rng.random::<f64>() < rho;
            let g: f64 = rng.sample(StandardNormal);
            if active {
                g * sd
            } else {
                0.0
            }
        })
        .collect()
}

/// Draws a problem instance; identical `(cfg, seed)` give identical instances.
pub fn sample_problem(cfg: &ProblemConfig, seed: u64) -> Result<ProblemInstance> {
    cfg.validate()?;
    let profile = cfg.profile()?;
    let mut perm_rng = stream_rng(seed, Stream::Permutation);
    let operator = if cfg.sign_randomization {
        let mut sign_rng = stream_rng(seed, Stream::Signs);
        SensingOperator::random(profile, &mut perm_rng, Some(&mut sign_rng))?
    } else {
        SensingOperator::random(profile, &mut perm_rng, None)?
    };
    let x = sample_bg(cfg.n, cfg.rho, &mut stream_rng(seed, Stream::Signal));
    let sigma2 = cfg.sigma2();
    let sd = libm::sqrt(sigma2);
    let mut noise_rng = stream_rng(seed, Stream::Noise);
    let w = (0..cfg.m)
        .map(|_| sd * noise_rng.sample::<f64, _>(StandardNormal))
        .collect();
    ProblemInstance::from_parts(operator, x, w, sigma2, cfg.rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dense(op: &SensingOperator) -> DMatrix<f64> {
        let (m, n) = (op.m(), op.n());
        let mut a = DMatrix::zeros(m, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = op.apply(&e).unwrap();
            for i in 0..m {
                a[(i, j)] = col[i];
            }
        }
        a
    }

    #[test]
    fn geometric_profile_invariants() {
        let p = SpectralProfile::geometric(2048, 4096, 1e3).unwrap();
        assert!((p.kappa() - 1e3).abs() / 1e3 < 1e-10);
        assert!((p.second_moment() - 1.0).abs() < 1e-10);
        assert!(p.singular_values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn unit_condition_number_is_flat() {
        let sv = synth_singular_values(4, 16, 1.0).unwrap();
        assert!(sv.iter().all(|s| (s - 2.0).abs() < 1e-15));
    }

    #[test]
    fn small_closed_form() {
        // M=4, N=8, κ=2: σ_0² = 8(1 − 2^{-2/3}) / (1 − 2^{-8/3}).
        let sv = synth_singular_values(4, 8, 2.0).unwrap();
        let s0 = 8.0 * (1.0 - libm::pow(2.0, -2.0 / 3.0)) / (1.0 - libm::pow(2.0, -8.0 / 3.0));
        assert!((sv[0] * sv[0] - s0).abs() < 1e-12);
        let total: f64 = sv.iter().map(|s| s * s).sum();
        assert!((total - 8.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(synth_singular_values(1, 8, 2.0).is_err());
        assert!(synth_singular_values(4, 8, 0.5).is_err());
        let p = SpectralProfile::geometric(4, 12, 2.0).unwrap();
        assert_eq!(
            SensingOperator::new(p, (0..12).collect(), None),
            Err(Error::NotPowerOfTwo(12))
        );
    }

    #[test]
    fn zero_maps_to_zero() {
        let p = SpectralProfile::geometric(4, 8, 3.0).unwrap();
        let op = SensingOperator::random(p, &mut stream_rng(1, Stream::Permutation), None).unwrap();
        assert!(op.apply(&[0.0; 8]).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dense_oracle_n8() {
        // Explicit 8×8 Sylvester Hadamard, same permutation, κ = 1.
        let p = SpectralProfile::geometric(4, 8, 1.0).unwrap();
        let perm = vec![5, 2, 7, 0, 1, 6, 3, 4];
        let op = SensingOperator::new(p, perm.clone(), None).unwrap();
        let a = dense(&op);
        let s = libm::sqrt(2.0);
        for i in 0..4 {
            for j in 0..8 {
                let h = if (perm[i] & j).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                let expect = s * h / libm::sqrt(8.0);
                assert!((a[(i, j)] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn vt_is_orthonormal_and_gram_matches() {
        let p = SpectralProfile::geometric(8, 16, 5.0).unwrap();
        let mut rng = stream_rng(7, Stream::Permutation);
        let op =
            SensingOperator::random(p, &mut rng, Some(&mut stream_rng(7, Stream::Signs))).unwrap();
        let v = sample_bg(16, 1.0, &mut stream_rng(3, Stream::Signal));
        let vt = op.apply_vt(&v).unwrap();
        let n1: f64 = v.iter().map(|a| a * a).sum();
        let n2: f64 = vt.iter().map(|a| a * a).sum();
        assert!((n1 - n2).abs() / n1 < 1e-12);
        let back = op.apply_v(&vt).unwrap();
        assert!(back.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-12));

        let a = dense(&op);
        let gram = a.transpose() * &a;
        for j in 0..16 {
            let mut e = vec![0.0; 16];
            e[j] = 1.0;
            let col = op.adjoint(&op.apply(&e).unwrap()).unwrap();
            for i in 0..16 {
                assert!((col[i] - gram[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = ProblemConfig {
            n: 64,
            m: 32,
            rho: 0.1,
            kappa: 10.0,
            snr_db: 40.0,
            sign_randomization: false,
        };
        let a = sample_problem(&cfg, 11).unwrap();
        let b = sample_problem(&cfg, 11).unwrap();
        assert_eq!(a, b);
        assert!((a.sigma2 - 1e-4).abs() < 1e-18);
        let ax = a.operator.apply(&a.x).unwrap();
        for i in 0..cfg.m {
            assert_eq!(a.y[i], ax[i] + a.w[i]);
        }
        let c = sample_problem(&cfg, 12).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn rho_outside_unit_interval_rejected() {
        let cfg = ProblemConfig {
            n: 16,
            m: 8,
            rho: 1.5,
            kappa: 1.0,
            snr_db: 10.0,
            sign_randomization: false,
        };
        assert!(sample_problem(&cfg, 0).is_err());
    }
}
