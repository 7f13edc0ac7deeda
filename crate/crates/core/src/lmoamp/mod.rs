//! Long-memory OAMP solver.
//!
//! Each iteration runs module A (sufficient statistic of the messages from
//! module B, linear filtering, Onsager correction, damping) followed by
//! module B (sufficient statistic, scalar denoising, Onsager correction,
//! damping). Messages carry a mean vector and a ledger of error covariances
//! with all earlier messages of the same direction.
//!
//! The filter of module A shares the right-singular vectors of `A`, so it is
//! stored as the diagonal `w` in `W = diag(w) Vᵀ` and every trace reduces to
//! a sum over singular values.

mod policy;

pub use policy::{
    CovarianceEstimator, DampingStyle, FilterKind, GuardScope, MemoryMode, MemoryPolicy,
    SolverConfig,
};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gaussian_stat::{combine_weights, weighted_cross, weighted_sum, CovarianceLedger};
use crate::prior::ScalarDenoiser;
use crate::problem::{ProblemInstance, SpectralProfile};

/// Filter diagonal `w_m = v σ_m / (σ² + v σ_m²)` of the LMMSE filter.
pub fn lmmse_filter_diag(v_suf: f64, profile: &SpectralProfile, sigma2: f64) -> Result<Vec<f64>> {
    if !(v_suf > 0.0) || !v_suf.is_finite() {
        return Err(Error::invalid(
            "v_suf",
            "variance must be positive and finite",
        ));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::invalid(
            "sigma2",
            "noise variance must be non-negative",
        ));
    }
    Ok(profile
        .singular_values()
        .iter()
        .map(|s| v_suf * s / (sigma2 + v_suf * s * s))
        .collect())
}

fn filter_diag(
    kind: FilterKind,
    v_suf: f64,
    profile: &SpectralProfile,
    sigma2: f64,
) -> Result<Vec<f64>> {
    match kind {
        FilterKind::Lmmse => lmmse_filter_diag(v_suf, profile, sigma2),
        FilterKind::MatchedFilter => Ok(profile.singular_values().to_vec()),
    }
}

/// `ξ_A = N⁻¹ Tr(I − WᵀA) = 1 − N⁻¹ Σ w_m σ_m`.
pub fn filter_divergence(w: &[f64], profile: &SpectralProfile) -> f64 {
    let s: f64 = w
        .iter()
        .zip(profile.singular_values())
        .map(|(w, s)| w * s)
        .sum();
    1.0 - s / profile.n() as f64
}

/// `γ_{t',t} = N⁻¹ Tr{(I − W_{t'}ᵀA)ᵀ(I − W_tᵀA)}`.
pub fn filter_gamma(w_prev: &[f64], w: &[f64], profile: &SpectralProfile) -> f64 {
    let sv = profile.singular_values();
    let s: f64 = (0..sv.len())
        .map(|m| (1.0 - w_prev[m] * sv[m]) * (1.0 - w[m] * sv[m]))
        .sum();
    ((profile.n() - sv.len()) as f64 + s) / profile.n() as f64
}

/// `N⁻¹ Tr(W_{t'} W_tᵀ)`.
pub fn filter_cross_trace(w_prev: &[f64], w: &[f64], n: usize) -> f64 {
    w_prev.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / n as f64
}

/// Complete solver history.
///
/// Index conventions: `x_ba[τ]`, `v_ba` and `x_ab[τ]`, `v_ab` are the
/// messages of iteration `τ`, with `x_ba[0] = 0`. Module B outputs of
/// iteration `τ` carry the label `τ + 1`: `x_post_b[τ]` is
/// `x^post_{B,τ+1}` and `ext_b[τ]` is `x^ext_{B,τ+1}`. The extrinsic ledger
/// `ext_b_cov` is indexed like `v_ba`: index 0 stands for the initial
/// all-zero message and index `τ + 1` for `x^ext_{B,τ+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x_ba: Vec<Vec<f64>>,
    pub v_ba: CovarianceLedger,
    pub suf_ba_weights: Vec<Vec<f64>>,
    pub suf_ba_cov: CovarianceLedger,
    pub filters: Vec<Vec<f64>>,
    pub xi_a: Vec<f64>,
    pub x_post_a: Vec<Vec<f64>>,
    pub post_a_cov: CovarianceLedger,
    pub ext_a: Vec<Vec<f64>>,
    pub ext_a_cov: CovarianceLedger,
    pub x_ab: Vec<Vec<f64>>,
    pub v_ab: CovarianceLedger,
    pub suf_ab_weights: Vec<Vec<f64>>,
    pub x_suf_ab: Vec<Vec<f64>>,
    pub suf_ab_cov: CovarianceLedger,
    pub xi_b: Vec<f64>,
    pub x_post_b: Vec<Vec<f64>>,
    pub post_b_cov: CovarianceLedger,
    pub post_b0: Vec<f64>,
    pub ext_b: Vec<Vec<f64>>,
    pub ext_b_cov: CovarianceLedger,
    /// `N⁻¹ ‖x^post_{B,t+1} − x‖²` per iteration.
    pub mse: Vec<f64>,
    /// Set when the stopping rule fired before `t_max`.
    pub converged: bool,
}

impl SolverState {
    /// Initial state `x_{B→A,0} = 0`, `v_{B→A,0,0} = E[x²]`.
    pub fn new(n: usize, second_moment: f64) -> Self {
        SolverState {
            x_ba: vec![vec![0.0; n]],
            v_ba: CovarianceLedger::with_initial(second_moment),
            suf_ba_weights: Vec::new(),
            suf_ba_cov: CovarianceLedger::new(),
            filters: Vec::new(),
            xi_a: Vec::new(),
            x_post_a: Vec::new(),
            post_a_cov: CovarianceLedger::new(),
            ext_a: Vec::new(),
            ext_a_cov: CovarianceLedger::new(),
            x_ab: Vec::new(),
            v_ab: CovarianceLedger::new(),
            suf_ab_weights: Vec::new(),
            x_suf_ab: Vec::new(),
            suf_ab_cov: CovarianceLedger::new(),
            xi_b: Vec::new(),
            x_post_b: Vec::new(),
            post_b_cov: CovarianceLedger::new(),
            post_b0: Vec::new(),
            ext_b: Vec::new(),
            ext_b_cov: CovarianceLedger::with_initial(second_moment),
            mse: Vec::new(),
            converged: false,
        }
    }

    /// Number of completed iterations.
    pub fn iterations(&self) -> usize {
        self.mse.len()
    }

    /// Latest signal estimate `x^post_{B,t+1}`, if any.
    pub fn estimate(&self) -> Option<&[f64]> {
        self.x_post_b.last().map(|v| v.as_slice())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mean_dot(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / a.len().max(1) as f64
}

/// Sufficient statistic of the messages in `memory` plus its covariances
/// with the statistics of earlier iterations.
struct Statistic {
    mean: Vec<f64>,
    weights: Vec<f64>,
    /// `v^suf_{t',t}` for `t' = 0..=t`.
    cov_row: Vec<f64>,
}

fn statistic(
    messages: &[Vec<f64>],
    ledger: &CovarianceLedger,
    weights_hist: &[Vec<f64>],
    policy: &MemoryPolicy,
    t: usize,
) -> Result<Statistic> {
    let idx = policy.memory_set(t);
    let (weights, variance) = combine_weights(&ledger.block(&idx, &idx))?;
    let msgs: Vec<&[f64]> = idx.iter().map(|&i| messages[i].as_slice()).collect();
    let mean = weighted_sum(&msgs, &weights);
    let mut cov_row = vec![0.0; t + 1];
    if policy.tracks_cross_covariance() {
        for (tp, w_prev) in weights_hist.iter().enumerate().take(t) {
            let idx_prev = policy.memory_set(tp);
            cov_row[tp] = weighted_cross(w_prev, &ledger.block(&idx_prev, &idx), &weights);
        }
    }
    cov_row[t] = variance;
    Ok(Statistic {
        mean,
        weights,
        cov_row,
    })
}

/// `Σ_{τ'≤t'} Σ_{τ≤t} θ_{τ',t'} θ_{τ,t} E[τ'+offset][τ+offset]` for `t' = 0..=t`.
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
                if *a == 0.0 {
                    continue;
                }
                for (j, b) in col_t.iter().enumerate() {
                    if *b != 0.0 {
                        acc += a * b * ext.get(i + offset, j + offset);
                    }
                }
            }
            acc
        })
        .collect()
}

fn damped_mean(messages: &[Vec<f64>], column: &[f64]) -> Vec<f64> {
    let msgs: Vec<&[f64]> = messages.iter().map(|m| m.as_slice()).collect();
    weighted_sum(&msgs, column)
}

/// Heuristic damping of a scalar message variance. `ext_precision` is
/// `1/v^post − 1/v^in`, `previous` the message variance of the previous
/// iteration (absent on the first iteration, which is undamped).
fn heuristic_variance(
    style: DampingStyle,
    theta: f64,
    ext_precision: f64,
    previous: Option<f64>,
) -> f64 {
    match previous {
        None => 1.0 / ext_precision,
        Some(prev) => match style {
            DampingStyle::HeuristicPrecision => {
                1.0 / (theta * ext_precision + (1.0 - theta) / prev)
            }
            _ => theta / ext_precision + (1.0 - theta) * prev,
        },
    }
}

fn check_finite(values: &[f64], stage: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { stage })
    }
}

/// Module A of iteration `t = state.x_ab.len()`.
pub fn module_a_step(
    state: &mut SolverState,
    problem: &ProblemInstance,
    config: &SolverConfig,
) -> Result<()> {
    let t = state.x_ab.len();
    if state.x_ba.len() != t + 1 {
        return Err(Error::DimensionMismatch {
            expected: t + 1,
            actual: state.x_ba.len(),
        });
    }
    let policy = &config.policy;
    let track = policy.tracks_cross_covariance();
    let op = &problem.operator;
    let profile = op.profile();
    let n = op.n();
    let sigma2 = problem.sigma2;

    let stat = statistic(&state.x_ba, &state.v_ba, &state.suf_ba_weights, policy, t)?;
    let v_suf = stat.cov_row[t];
    let w = filter_diag(config.filter, v_suf, profile, sigma2)?;
    let xi = filter_divergence(&w, profile);
    if !(xi < 1.0) {
        return Err(Error::DegenerateFilter(xi));
    }

    let ax = op.apply(&stat.mean)?;
    let resid: Vec<f64> = problem.y.iter().zip(&ax).map(|(y, a)| y - a).collect();
    let corr = op.adjoint_diag(&w, &resid)?;
    let x_post: Vec<f64> = stat.mean.iter().zip(&corr).map(|(a, b)| a + b).collect();
    check_finite(&x_post, "module A posterior mean")?;

    let post_entry = |w_prev: &[f64], v: f64| {
        filter_gamma(w_prev, &w, profile) * v + sigma2 * filter_cross_trace(w_prev, &w, n)
    };
    let mut post_row = vec![0.0; t + 1];
    if track {
        for tp in 0..t {
            post_row[tp] = post_entry(&state.filters[tp], stat.cov_row[tp]);
        }
    }
    post_row[t] = post_entry(&w, v_suf);

    let x_ext: Vec<f64> = x_post
        .iter()
        .zip(&stat.mean)
        .map(|(p, s)| (p - xi * s) / (1.0 - xi))
        .collect();
    let mut ext_row = vec![0.0; t + 1];
    if track {
        for tp in 0..=t {
            let xi_p = if tp == t { xi } else { state.xi_a[tp] };
            ext_row[tp] =
                (post_row[tp] - xi_p * xi * stat.cov_row[tp]) / ((1.0 - xi_p) * (1.0 - xi));
        }
    } else {
        let prec = 1.0 / post_row[t] - 1.0 / v_suf;
        if !(prec > 0.0) {
            return Err(Error::DegenerateFilter(xi));
        }
        ext_row[t] = 1.0 / prec;
    }
    check_finite(&ext_row, "module A extrinsic covariance")?;

    state.suf_ba_weights.push(stat.weights);
    state.suf_ba_cov.push(&stat.cov_row)?;
    state.filters.push(w);
    state.xi_a.push(xi);
    state.x_post_a.push(x_post);
    state.post_a_cov.push(&post_row)?;
    state.ext_a.push(x_ext);
    state.ext_a_cov.push(&ext_row)?;
    if config.guard_all() {
        state.ext_a_cov.guard(config.guard_eps);
    }

    let col = policy.theta_a_column(t);
    let x_ab = damped_mean(&state.ext_a, &col);
    let row = if track {
        damped_row(&state.ext_a_cov, 0, t, |k| policy.theta_a_column(k))
    } else {
        let mut r = vec![0.0; t + 1];
        let prev = if t == 0 {
            None
        } else {
            Some(state.v_ab.diag(t - 1))
        };
        r[t] = heuristic_variance(policy.damping_style, policy.theta_a, 1.0 / ext_row[t], prev);
        r
    };
    check_finite(&row, "module A message covariance")?;
    state.x_ab.push(x_ab);
    state.v_ab.push(&row)?;
    if config.guard_all() {
        state.v_ab.guard(config.guard_eps);
    }
    Ok(())
}

/// Module B of iteration `t = state.x_post_b.len()`.
pub fn module_b_step<D: ScalarDenoiser + ?Sized>(
    state: &mut SolverState,
    problem: &ProblemInstance,
    config: &SolverConfig,
    denoiser: &D,
) -> Result<()> {
    let t = state.x_post_b.len();
    if state.x_ab.len() != t + 1 {
        return Err(Error::DimensionMismatch {
            expected: t + 1,
            actual: state.x_ab.len(),
        });
    }
    let policy = &config.policy;
    let track = policy.tracks_cross_covariance();
    let m2 = denoiser.second_moment();

    let stat = statistic(&state.x_ab, &state.v_ab, &state.suf_ab_weights, policy, t)?;
    let v_suf = stat.cov_row[t];
    let den = denoiser.denoise(&stat.mean, v_suf)?;
    let xi = den.derivative_avg;
    if !(xi < 1.0) {
        return Err(Error::DegenerateDenoiser(xi));
    }
    let f = &den.mean;
    check_finite(f, "module B posterior mean")?;
    let fs = mean_dot(f, &stat.mean);

    let mut post_row = vec![0.0; t + 1];
    if track {
        for tp in 0..t {
            let c = stat.cov_row[tp];
            let s_prev = &state.x_suf_ab[tp];
            post_row[tp] = match config.estimator {
                CovarianceEstimator::PosteriorCovariance => denoiser.average_posterior_covariance(
                    s_prev,
                    &stat.mean,
                    state.suf_ab_cov.diag(tp),
                    c,
                    v_suf,
                )?,
                CovarianceEstimator::Consistent => {
                    let f_prev = &state.x_post_b[tp];
                    m2 + mean_dot(f_prev, f) + c * xi - mean_dot(f, s_prev) + c * state.xi_b[tp]
                        - mean_dot(f_prev, &stat.mean)
                }
            };
        }
    }
    let (post_tt, post0) = match config.estimator {
        CovarianceEstimator::PosteriorCovariance => (den.posterior_var, den.posterior_var),
        CovarianceEstimator::Consistent => (
            m2 + mean_dot(f, f) + 2.0 * v_suf * xi - 2.0 * fs,
            m2 + v_suf * xi - fs,
        ),
    };
    post_row[t] = post_tt;

    let x_ext: Vec<f64> = f
        .iter()
        .zip(&stat.mean)
        .map(|(p, s)| (p - xi * s) / (1.0 - xi))
        .collect();
    // Row of the extrinsic ledger for label t+1; entry 0 pairs with x_{B→A,0}.
    let mut ext_row = vec![0.0; t + 2];
    if track {
        ext_row[0] = post0 / (1.0 - xi);
        for tp in 0..=t {
            let xi_p = if tp == t { xi } else { state.xi_b[tp] };
            ext_row[tp + 1] =
                (post_row[tp] - xi_p * xi * stat.cov_row[tp]) / ((1.0 - xi_p) * (1.0 - xi));
        }
    } else {
        let prec = 1.0 / post_row[t] - 1.0 / v_suf;
        if !(prec > 0.0) {
            return Err(Error::DegenerateDenoiser(xi));
        }
        ext_row[t + 1] = 1.0 / prec;
    }
    check_finite(&ext_row, "module B extrinsic covariance")?;

    let mse = problem.mse(f);
    state.suf_ab_weights.push(stat.weights);
    state.suf_ab_cov.push(&stat.cov_row)?;
    state.x_suf_ab.push(stat.mean);
    state.xi_b.push(xi);
    state.post_b_cov.push(&post_row)?;
    state.post_b0.push(post0);
    state.x_post_b.push(den.mean);
    state.ext_b.push(x_ext);
    state.ext_b_cov.push(&ext_row)?;
    if config.guard_ext_b() {
        state.ext_b_cov.guard(config.guard_eps);
    }

    let col = policy.theta_b_column(t);
    let x_ba = damped_mean(&state.ext_b, &col);
    let mut row = vec![0.0; t + 2];
    if track {
        row[0] = col
            .iter()
            .enumerate()
            .map(|(tau, th)| th * state.ext_b_cov.get(0, tau + 1))
            .sum();
        let inner = damped_row(&state.ext_b_cov, 1, t, |k| policy.theta_b_column(k));
        row[1..].copy_from_slice(&inner);
    } else {
        let prev = if t == 0 {
            None
        } else {
            Some(state.v_ba.diag(t))
        };
        row[t + 1] = heuristic_variance(
            policy.damping_style,
            policy.theta_b,
            1.0 / ext_row[t + 1],
            prev,
        );
    }
    check_finite(&row, "module B message covariance")?;
    state.x_ba.push(x_ba);
    state.v_ba.push(&row)?;
    if config.guard_all() {
        state.v_ba.guard(config.guard_eps);
    }
    state.mse.push(mse);
    Ok(())
}

/// Runs the solver from the standard initialization for up to `t_max`
/// iterations, stopping early once `|v_{B→A,t+1,t+1} − v_{B→A,t,t}|` falls
/// below `stop_tol`.
pub fn run<D: ScalarDenoiser + ?Sized>(
    problem: &ProblemInstance,
    denoiser: &D,
    config: &SolverConfig,
) -> Result<SolverState> {
    config.validate()?;
    let mut state = SolverState::new(problem.n(), denoiser.second_moment());
    for t in 0..config.t_max {
        module_a_step(&mut state, problem, config).map_err(|e| e.at_iteration(t))?;
        module_b_step(&mut state, problem, config, denoiser).map_err(|e| e.at_iteration(t))?;
        let change = (state.v_ba.diag(t + 1) - state.v_ba.diag(t)).abs();
        if change < config.stop_tol {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}
