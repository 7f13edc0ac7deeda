//! Deterministic state-evolution predictors.
//!
//! Four recursions are provided: the scalar Bayes-optimal recursion
//! ([`se_bayes_step`], [`se_bayes`]), the general covariance-ledger
//! recursion for any memory policy without heuristic damping
//! ([`se_general`]), and the two-dimensional recursion for damped OAMP
//! ([`se_damped_oamp`]). Module A expectations reduce to spectral moments of
//! `AᵀA`; module B expectations are computed by quadrature.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gaussian_stat::{combine_weights, weighted_cross, CovarianceLedger};
use crate::lmoamp::{FilterKind, MemoryPolicy, SolverConfig};
use crate::prior::{BgIntegrator, BgPrior};
use crate::problem::SpectralProfile;

/// Default fixed-point tolerance on `|Δ v̄_{B→A}|`.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Default fixed-point iteration cap.
pub const FIXED_POINT_MAX_ITER: usize = 10_000;

/// Relative slack allowed when checking monotone decrease.
const MONOTONE_SLACK: f64 = 8.0 * f64::EPSILON;

/// `η(x) = 1 − C⁻¹ ln[(κ²−1+κ²Cx)/(κ²−1+Cx)]` with `C = 2δ⁻¹ ln κ`, the
/// large-system η-transform of the geometric singular-value profile.
///
/// At `κ = 1` the limit `1 − δx/(δ+x)` is used.
pub fn eta_geometric(x: f64, delta: f64, kappa: f64) -> Result<f64> {
    check_geometric(delta, kappa)?;
    if !(x >= 0.0) {
        return Err(Error::invalid("x", "must be non-negative"));
    }
    Ok(Geometric::new(delta, kappa).eta(x))
}

fn check_geometric(delta: f64, kappa: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid("delta", "must lie in (0, 1]"));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::invalid(
            "kappa",
            "condition number must be finite and at least 1",
        ));
    }
    Ok(())
}

/// Large-system spectrum: a fraction `δ` of eigenvalues of `AᵀA` is
/// log-uniform with ratio `κ²` and mean `1/δ`, the rest are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Geometric {
    delta: f64,
    kappa: f64,
    alpha: f64,
    c: f64,
}

impl Geometric {
    fn new(delta: f64, kappa: f64) -> Self {
        let k2 = kappa * kappa;
        Geometric {
            delta,
            kappa,
            alpha: k2 - 1.0,
            c: 2.0 * libm::log(kappa) / delta,
        }
    }

    fn flat(&self) -> bool {
        self.kappa == 1.0
    }

    fn beta(&self) -> f64 {
        self.kappa * self.kappa * self.c
    }

    fn log_ratio(&self, x: f64) -> f64 {
        libm::log1p(self.beta() * x / self.alpha) - libm::log1p(self.c * x / self.alpha)
    }

    fn eta(&self, x: f64) -> f64 {
        if self.flat() {
            return 1.0 - self.delta * x / (self.delta + x);
        }
        1.0 - self.log_ratio(x) / self.c
    }

    /// Divided difference of `ln(α + b x)` between `a_prev` and `a`.
    fn log_divided(&self, b: f64, a_prev: f64, a: f64) -> f64 {
        let h = a_prev - a;
        let base = self.alpha + b * a;
        if h == 0.0 {
            b / base
        } else {
            libm::log1p(b * h / base) / h
        }
    }

    fn pair_moments(&self, a_prev: f64, a: f64) -> (f64, f64) {
        if self.flat() {
            let d = self.delta;
            let prod = (1.0 + a_prev / d) * (1.0 + a / d);
            return ((1.0 - d) + d / prod, 1.0 / prod);
        }
        let dl = self.log_divided(self.beta(), a_prev, a) - self.log_divided(self.c, a_prev, a);
        let s2 = dl / self.c;
        let gamma = 1.0 - (self.log_ratio(a_prev) + a * dl) / self.c;
        (gamma, s2)
    }
}

/// Spectrum of `AᵀA` driving module A of the state evolution.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumModel {
    /// Closed-form large-system limit of the geometric profile.
    Geometric { delta: f64, kappa: f64 },
    /// Singular values of a concrete operator.
    Empirical(SpectralProfile),
}

impl SpectrumModel {
    pub fn geometric(delta: f64, kappa: f64) -> Result<Self> {
        check_geometric(delta, kappa)?;
        Ok(SpectrumModel::Geometric { delta, kappa })
    }

    pub fn empirical(profile: SpectralProfile) -> Self {
        SpectrumModel::Empirical(profile)
    }

    pub fn delta(&self) -> f64 {
        match self {
            SpectrumModel::Geometric { delta, .. } => *delta,
            SpectrumModel::Empirical(p) => p.delta(),
        }
    }

    /// `η(x) = N⁻¹ Tr{(I + x AᵀA)⁻¹}`.
    pub fn eta(&self, x: f64) -> f64 {
        match self {
            SpectrumModel::Geometric { delta, kappa } => Geometric::new(*delta, *kappa).eta(x),
            SpectrumModel::Empirical(p) => p.eta(x),
        }
    }

    /// Moments `(γ, S)` of two LMMSE filters with `a = v/σ²`:
    /// `γ = N⁻¹ Σ 1/((1+a'λ)(1+aλ))` over all eigenvalues (zeros included)
    /// and `S = N⁻¹ Σ λ/((1+a'λ)(1+aλ))`.
    pub fn pair_moments(&self, a_prev: f64, a: f64) -> (f64, f64) {
        match self {
            SpectrumModel::Geometric { delta, kappa } => {
                Geometric::new(*delta, *kappa).pair_moments(a_prev, a)
            }
            SpectrumModel::Empirical(p) => {
                let n = p.n() as f64;
                let (mut g, mut s) = (0.0, 0.0);
                for sv in p.singular_values() {
                    let l = sv * sv;
                    let inv = 1.0 / ((1.0 + a_prev * l) * (1.0 + a * l));
                    g += inv;
                    s += l * inv;
                }
                (((p.n() - p.m()) as f64 + g) / n, s / n)
            }
        }
    }

    /// Posterior covariance of two LMMSE estimates formed from inputs with
    /// variances `v_prev`, `v` and cross-covariance `c`.
    fn post_a(&self, v_prev: f64, c: f64, v: f64, sigma2: f64) -> f64 {
        let (ap, a) = (v_prev / sigma2, v / sigma2);
        let (gamma, s2) = self.pair_moments(ap, a);
        gamma * c + sigma2 * ap * a * s2
    }
}

/// One step of the scalar Bayes-optimal recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeBayesStep {
    pub v_ba: f64,
    pub xi_a: f64,
    pub v_ab: f64,
    pub xi_b: f64,
    pub mmse: f64,
    pub v_ba_next: f64,
}

/// `ξ̄_A = η(v̄_{B→A}/σ²)`, `v̄_{A→B} = v̄_{B→A} ξ̄_A/(1−ξ̄_A)`,
/// `mmse = mmse(v̄_{A→B})`, `v̄⁺_{B→A} = (1/mmse − 1/v̄_{A→B})⁻¹`.
pub fn se_bayes_step(
    v_ba: f64,
    spectrum: &SpectrumModel,
    sigma2: f64,
    integ: &BgIntegrator,
) -> Result<SeBayesStep> {
    if !(v_ba > 0.0) || !v_ba.is_finite() {
        return Err(Error::invalid(
            "v_ba",
            "variance must be positive and finite",
        ));
    }
    let xi_a = spectrum.eta(v_ba / sigma2);
    if !(xi_a > 0.0 && xi_a < 1.0) {
        return Err(Error::DegenerateFilter(xi_a));
    }
    let v_ab = v_ba * xi_a / (1.0 - xi_a);
    finite(v_ab, "module A extrinsic variance")?;
    let mmse = integ.mmse(v_ab)?;
    finite(mmse, "module B posterior variance")?;
    // `1 − ξ_B` is integrated directly: `1 − mmse / v_ab` cancels badly
    // when the denoiser barely shrinks.
    let gap = integ.derivative_complement(v_ab)?;
    let xi_b = mmse / v_ab;
    if !(gap > 0.0 && xi_b < 1.0) {
        return Err(Error::DegenerateDenoiser(xi_b));
    }
    let v_ba_next = mmse / gap;
    finite(v_ba_next, "module B extrinsic variance")?;
    Ok(SeBayesStep {
        v_ba,
        xi_a,
        v_ab,
        xi_b,
        mmse,
        v_ba_next,
    })
}

fn finite(x: f64, stage: &'static str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { stage })
    }
}

/// State-evolution trajectory. Entry `t` of `v_ab`, `xi_a`, `xi_b` and `mse`
/// belongs to iteration `t`; `v_ba` has one more entry, starting from
/// `v̄_{B→A,0,0}`. `mse[t]` predicts `N⁻¹‖x^post_{B,t+1} − x‖²`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeTrajectory {
    pub v_ba: Vec<f64>,
    pub v_ab: Vec<f64>,
    pub xi_a: Vec<f64>,
    pub xi_b: Vec<f64>,
    pub mse: Vec<f64>,
    /// Full `v̄_{A→B,t',t}` ledger when tracked.
    pub v_ab_matrix: Option<CovarianceLedger>,
    /// Full `v̄_{B→A,t',t}` ledger when tracked.
    pub v_ba_matrix: Option<CovarianceLedger>,
}

impl SeTrajectory {
    pub fn len(&self) -> usize {
        self.mse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mse.is_empty()
    }
}

/// Runs `iterations` steps of [`se_bayes_step`] from `v̄_{B→A,0,0} = E[x²]`.
pub fn se_bayes(
    iterations: usize,
    spectrum: &SpectrumModel,
    sigma2: f64,
    prior: &BgPrior,
) -> Result<SeTrajectory> {
    let integ = BgIntegrator::new(*prior);
    let mut tr = SeTrajectory {
        v_ba: vec![prior.second_moment()],
        ..SeTrajectory::default()
    };
    for t in 0..iterations {
        let v = tr.v_ba[t];
        let step = se_bayes_step(v, spectrum, sigma2, &integ).map_err(|e| e.at_iteration(t))?;
        tr.xi_a.push(step.xi_a);
        tr.v_ab.push(step.v_ab);
        tr.xi_b.push(step.xi_b);
        tr.mse.push(step.mmse);
        tr.v_ba.push(step.v_ba_next);
    }
    Ok(tr)
}

/// Scalar-ledger analogue of the solver's sufficient statistic.
fn statistic_row(
    ledger: &CovarianceLedger,
    weights_hist: &[Vec<f64>],
    policy: &MemoryPolicy,
    t: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let idx = policy.memory_set(t);
    let (weights, variance) = combine_weights(&ledger.block(&idx, &idx))?;
    let mut row = vec![0.0; t + 1];
    if policy.tracks_cross_covariance() {
        for (tp, w_prev) in weights_hist.iter().enumerate().take(t) {
            let idx_prev = policy.memory_set(tp);
            row[tp] = weighted_cross(w_prev, &ledger.block(&idx_prev, &idx), &weights);
        }
    }
    row[t] = variance;
    Ok((weights, row))
}

fn damped_row(
    ext: &CovarianceLedger,
    offset: usize,
    t: usize,
    column: impl Fn(usize) -> Vec<f64>,
) -> Vec<f64> {
    let col_t = column(t);
    (0..=t)
        .map(|tp| {
            let col_p = column(tp);
            let mut acc = 0.0;
            for (i, a) in col_p.iter().enumerate() {
                for (j, b) in col_t.iter().enumerate() {
                    acc += a * b * ext.get(i + offset, j + offset);
                }
            }
            acc
        })
        .collect()
}

/// General covariance-ledger recursion for the LMMSE filter and the
/// Bayes-optimal denoiser, mirroring the solver step by step with every
/// empirical average replaced by its expectation.
///
/// Runs `config.t_max` iterations and applies the same PSD guard as the
/// solver. Heuristic damping has no covariance ledger and is rejected.
pub fn se_general(
    config: &SolverConfig,
    spectrum: &SpectrumModel,
    sigma2: f64,
    prior: &BgPrior,
) -> Result<SeTrajectory> {
    config.validate()?;
    let policy = &config.policy;
    if policy.is_heuristic() {
        return Err(Error::invalid(
            "policy",
            "heuristic damping has no covariance recursion",
        ));
    }
    if config.filter != FilterKind::Lmmse {
        return Err(Error::invalid(
            "filter",
            "state evolution requires the LMMSE filter",
        ));
    }
    let integ = BgIntegrator::new(*prior);
    let m2 = prior.second_moment();

    let mut v_ba = CovarianceLedger::with_initial(m2);
    let mut v_ab = CovarianceLedger::new();
    let mut ext_a = CovarianceLedger::new();
    let mut ext_b = CovarianceLedger::with_initial(m2);
    let mut suf_a = CovarianceLedger::new();
    let mut suf_b = CovarianceLedger::new();
    let mut w_a: Vec<Vec<f64>> = Vec::new();
    let mut w_b: Vec<Vec<f64>> = Vec::new();
    let mut tr = SeTrajectory::default();
    tr.v_ba.push(m2);

    for t in 0..config.t_max {
        let at = |e: Error| e.at_iteration(t);

        // Module A.
        let (weights, suf_row) = statistic_row(&v_ba, &w_a, policy, t).map_err(at)?;
        let v_suf = suf_row[t];
        let xi = spectrum.eta(v_suf / sigma2);
        if !(xi > 0.0 && xi < 1.0) {
            return Err(at(Error::DegenerateFilter(xi)));
        }
        let mut row = vec![0.0; t + 1];
        for tp in 0..=t {
            let xi_p = if tp == t { xi } else { tr.xi_a[tp] };
            let post =
                spectrum.post_a(suf_a_diag(&suf_a, tp, v_suf, t), suf_row[tp], v_suf, sigma2);
            row[tp] = (post - xi_p * xi * suf_row[tp]) / ((1.0 - xi_p) * (1.0 - xi));
        }
        finite_row(&row, "module A extrinsic covariance").map_err(at)?;
        w_a.push(weights);
        suf_a.push(&suf_row).map_err(at)?;
        tr.xi_a.push(xi);
        ext_a.push(&row).map_err(at)?;
        if config.guard_all() {
            ext_a.guard(config.guard_eps);
        }
        let row = damped_row(&ext_a, 0, t, |k| policy.theta_a_column(k));
        v_ab.push(&row).map_err(at)?;
        if config.guard_all() {
            v_ab.guard(config.guard_eps);
        }
        tr.v_ab.push(v_ab.diag(t));

        // Module B.
        let (weights, suf_row) = statistic_row(&v_ab, &w_b, policy, t).map_err(at)?;
        let v_suf = suf_row[t];
        let mmse = integ.mmse(v_suf).map_err(at)?;
        let xi = integ.mean_derivative(v_suf).map_err(at)?;
        if !(xi < 1.0) {
            return Err(at(Error::DegenerateDenoiser(xi)));
        }
        let mut row = vec![0.0; t + 2];
        row[0] = integ.signal_error_correlation(v_suf).map_err(at)? / (1.0 - xi);
        for tp in 0..=t {
            let (xi_p, post) = if tp == t {
                (xi, mmse)
            } else {
                let post = integ
                    .expected_covariance(suf_b.diag(tp), suf_row[tp], v_suf)
                    .map_err(at)?;
                (tr.xi_b[tp], post)
            };
            row[tp + 1] = (post - xi_p * xi * suf_row[tp]) / ((1.0 - xi_p) * (1.0 - xi));
        }
        finite_row(&row, "module B extrinsic covariance").map_err(at)?;
        w_b.push(weights);
        suf_b.push(&suf_row).map_err(at)?;
        tr.xi_b.push(xi);
        tr.mse.push(mmse);
        ext_b.push(&row).map_err(at)?;
        if config.guard_ext_b() {
            ext_b.guard(config.guard_eps);
        }
        let col = policy.theta_b_column(t);
        let mut row = vec![0.0; t + 2];
        row[0] = col
            .iter()
            .enumerate()
            .map(|(k, th)| th * ext_b.get(0, k + 1))
            .sum();
        row[1..].copy_from_slice(&damped_row(&ext_b, 1, t, |k| policy.theta_b_column(k)));
        v_ba.push(&row).map_err(at)?;
        if config.guard_all() {
            v_ba.guard(config.guard_eps);
        }
        tr.v_ba.push(v_ba.diag(t + 1));
    }
    tr.v_ab_matrix = Some(v_ab);
    tr.v_ba_matrix = Some(v_ba);
    Ok(tr)
}

/// Variance of the module-A statistic at `tp`, which for `tp = t` is not
/// yet stored in the ledger.
fn suf_a_diag(suf: &CovarianceLedger, tp: usize, v_suf: f64, t: usize) -> f64 {
    if tp == t {
        v_suf
    } else {
        suf.diag(tp)
    }
}

fn finite_row(row: &[f64], stage: &'static str) -> Result<()> {
    if row.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { stage })
    }
}

/// Two-dimensional recursion for damped OAMP with correct covariance
/// tracking: the latest message is used as the sufficient statistic, and
/// damping mixes the new extrinsic message with the previous one.
///
/// The auxiliary sequences `c̄_A(t', t) = Cov(ext_{A,t'}, x_{A→B,t})` and
/// `c̄_B(t', t) = Cov(ext_{B,t'}, x_{B→A,t})` close the recursion, with
/// `c̄_A(t', 0) = v̄^ext_{A,t',0}` and `c̄_B(t', 1) = v̄^ext_{B,t',1}`.
pub fn se_damped_oamp(
    theta_a: f64,
    theta_b: f64,
    iterations: usize,
    spectrum: &SpectrumModel,
    sigma2: f64,
    prior: &BgPrior,
) -> Result<SeTrajectory> {
    MemoryPolicy::damped(theta_a, theta_b)?;
    if iterations == 0 {
        return Err(Error::invalid(
            "iterations",
            "at least one iteration is required",
        ));
    }
    let integ = BgIntegrator::new(*prior);
    let m2 = prior.second_moment();
    let size = iterations + 1;
    // Full (non-symmetric) auxiliary matrices indexed [t'][t].
    let mut c_a = vec![vec![0.0; size]; size];
    let mut c_b = vec![vec![0.0; size]; size];
    let mut ext_a = CovarianceLedger::new();
    let mut ext_b = CovarianceLedger::with_initial(m2);
    let mut v_ab = CovarianceLedger::new();
    let mut v_ba = CovarianceLedger::with_initial(m2);
    let mut tr = SeTrajectory {
        v_ba: vec![m2],
        ..SeTrajectory::default()
    };

    for t in 0..iterations {
        let at = |e: Error| e.at_iteration(t);

        // Module A: extrinsic covariances with all earlier iterations.
        let v = v_ba.diag(t);
        let xi = spectrum.eta(v / sigma2);
        if !(xi > 0.0 && xi < 1.0) {
            return Err(at(Error::DegenerateFilter(xi)));
        }
        let row: Vec<f64> = (0..=t)
            .map(|tp| {
                let xi_p = if tp == t { xi } else { tr.xi_a[tp] };
                let c = v_ba.get(tp, t);
                let post = spectrum.post_a(v_ba.diag(tp), c, v, sigma2);
                (post - xi_p * xi * c) / ((1.0 - xi_p) * (1.0 - xi))
            })
            .collect();
        finite_row(&row, "module A extrinsic covariance").map_err(at)?;
        ext_a.push(&row).map_err(at)?;
        tr.xi_a.push(xi);

        for k in 0..t {
            c_a[t][k] = if k == 0 {
                ext_a.get(t, 0)
            } else {
                theta_a * ext_a.get(t, k) + (1.0 - theta_a) * c_a[t][k - 1]
            };
        }
        for j in 0..=t {
            c_a[j][t] = if t == 0 {
                ext_a.get(j, 0)
            } else {
                theta_a * ext_a.get(j, t) + (1.0 - theta_a) * c_a[j][t - 1]
            };
        }
        let mut row = vec![0.0; t + 1];
        row[0] = c_a[0][t];
        for tp in 1..=t {
            row[tp] = theta_a * c_a[tp][t] + (1.0 - theta_a) * row[tp - 1];
        }
        v_ab.push(&row).map_err(at)?;
        tr.v_ab.push(v_ab.diag(t));

        // Module B, producing label L = t + 1.
        let v = v_ab.diag(t);
        let mmse = integ.mmse(v).map_err(at)?;
        let xi = integ.mean_derivative(v).map_err(at)?;
        if !(xi < 1.0) {
            return Err(at(Error::DegenerateDenoiser(xi)));
        }
        let l = t + 1;
        let mut row = vec![0.0; l + 1];
        row[0] = integ.signal_error_correlation(v).map_err(at)? / (1.0 - xi);
        for tp in 0..=t {
            let c = v_ab.get(tp, t);
            let (xi_p, post) = if tp == t {
                (xi, mmse)
            } else {
                let post = integ.expected_covariance(v_ab.diag(tp), c, v).map_err(at)?;
                (tr.xi_b[tp], post)
            };
            row[tp + 1] = (post - xi_p * xi * c) / ((1.0 - xi_p) * (1.0 - xi));
        }
        finite_row(&row, "module B extrinsic covariance").map_err(at)?;
        ext_b.push(&row).map_err(at)?;
        tr.xi_b.push(xi);
        tr.mse.push(mmse);

        for k in 1..l {
            c_b[l][k] = if k == 1 {
                ext_b.get(l, 1)
            } else {
                theta_b * ext_b.get(l, k) + (1.0 - theta_b) * c_b[l][k - 1]
            };
        }
        for i in 0..=l {
            c_b[i][l] = if l == 1 {
                ext_b.get(i, 1)
            } else {
                theta_b * ext_b.get(i, l) + (1.0 - theta_b) * c_b[i][l - 1]
            };
        }
        let mut row = vec![0.0; l + 1];
        row[0] = c_b[0][l];
        row[1] = c_b[1][l];
        for tp in 2..=l {
            row[tp] = theta_b * c_b[tp][l] + (1.0 - theta_b) * row[tp - 1];
        }
        v_ba.push(&row).map_err(at)?;
        tr.v_ba.push(v_ba.diag(l));
    }
    tr.v_ab_matrix = Some(v_ab);
    tr.v_ba_matrix = Some(v_ba);
    Ok(tr)
}

/// Result of [`fixed_point`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub v_ab: f64,
    pub v_ba: f64,
    pub mse: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates a scalar Bayes-optimal stepper from `v0` until
/// `|Δ v̄_{B→A}| < tol`.
///
/// The sequence must be non-increasing; an increase beyond rounding is
/// reported as [`Error::NotMonotone`]. Hitting `max_iter` returns the last
/// iterate with `converged = false`.
pub fn fixed_point<F>(mut stepper: F, v0: f64, tol: f64, max_iter: usize) -> Result<FixedPoint>
where
    F: FnMut(f64) -> Result<SeBayesStep>,
{
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let mut v = v0;
    let mut last = None;
    for it in 0..max_iter {
        let step = stepper(v).map_err(|e| e.at_iteration(it))?;
        let next = step.v_ba_next;
        if next > v * (1.0 + MONOTONE_SLACK) {
            return Err(Error::NotMonotone { iteration: it });
        }
        let done = (next - v).abs() < tol;
        last = Some(step);
        v = next;
        if done {
            return Ok(FixedPoint {
                v_ab: step.v_ab,
                v_ba: v,
                mse: step.mmse,
                iterations: it + 1,
                converged: true,
            });
        }
    }
    match last {
        Some(step) => Ok(FixedPoint {
            v_ab: step.v_ab,
            v_ba: v,
            mse: step.mmse,
            iterations: max_iter,
            converged: false,
        }),
        None => Err(Error::invalid(
            "max_iter",
            "at least one iteration is required",
        )),
    }
}

/// Fixed point of the Bayes-optimal recursion from `v̄_{B→A,0,0} = E[x²]`.
pub fn bayes_fixed_point(
    spectrum: &SpectrumModel,
    sigma2: f64,
    prior: &BgPrior,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint> {
    let integ = BgIntegrator::new(*prior);
    fixed_point(
        |v| se_bayes_step(v, spectrum, sigma2, &integ),
        prior.second_moment(),
        tol,
        max_iter,
    )
}
