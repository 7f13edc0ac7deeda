//! Memory subsets, damping schedules and solver options.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gaussian_stat::{geometric_column, PSD_GUARD_EPS};

/// Which preceding messages enter the sufficient statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryMode {
    /// All messages `{0, …, t}`.
    Full,
    /// Only the newest message `{t}`.
    Latest,
}

/// How damped messages and their covariances are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DampingStyle {
    /// No damping: `θ_{τ,t} = δ_{τ,t}`.
    None,
    /// Geometric damping of the means with the full covariance tracked.
    CorrectCovariance,
    /// Geometric damping of the means; variances damped in the precision domain.
    HeuristicPrecision,
    /// Geometric damping of the means; variances damped in the variance domain.
    HeuristicVariance,
}

/// Memory and damping policy of one solver variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryPolicy {
    pub mode: MemoryMode,
    pub theta_a: f64,
    pub theta_b: f64,
    pub damping_style: DampingStyle,
}

impl MemoryPolicy {
    /// Long-memory message passing over all preceding messages, undamped.
    pub fn full() -> Self {
        MemoryPolicy {
            mode: MemoryMode::Full,
            theta_a: 1.0,
            theta_b: 1.0,
            damping_style: DampingStyle::None,
        }
    }

    /// Conventional OAMP: latest message only, undamped.
    pub fn oamp() -> Self {
        MemoryPolicy {
            mode: MemoryMode::Latest,
            theta_a: 1.0,
            theta_b: 1.0,
            damping_style: DampingStyle::None,
        }
    }

    /// Damped OAMP with the message covariances tracked exactly.
    pub fn damped(theta_a: f64, theta_b: f64) -> Result<Self> {
        Self::latest(theta_a, theta_b, DampingStyle::CorrectCovariance)
    }

    /// Damped OAMP with precision-domain variance damping.
    pub fn heuristic_precision(theta_a: f64, theta_b: f64) -> Result<Self> {
        Self::latest(theta_a, theta_b, DampingStyle::HeuristicPrecision)
    }

    /// Damped OAMP with variance-domain variance damping.
    pub fn heuristic_variance(theta_a: f64, theta_b: f64) -> Result<Self> {
        Self::latest(theta_a, theta_b, DampingStyle::HeuristicVariance)
    }

    fn latest(theta_a: f64, theta_b: f64, damping_style: DampingStyle) -> Result<Self> {
        let p = MemoryPolicy {
            mode: MemoryMode::Latest,
            theta_a,
            theta_b,
            damping_style,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, th) in [("theta_a", self.theta_a), ("theta_b", self.theta_b)] {
            if !(th > 0.0 && th <= 1.0) {
                return Err(Error::invalid(name, "damping factor must lie in (0, 1]"));
            }
        }
        if self.mode == MemoryMode::Full && self.damping_style != DampingStyle::None {
            return Err(Error::invalid(
                "damping_style",
                "full memory uses no damping",
            ));
        }
        Ok(())
    }

    /// Message indices combined at iteration `t`.
    pub fn memory_set(&self, t: usize) -> Vec<usize> {
        match self.mode {
            MemoryMode::Full => (0..=t).collect(),
            MemoryMode::Latest => vec![t],
        }
    }

    pub fn is_heuristic(&self) -> bool {
        matches!(
            self.damping_style,
            DampingStyle::HeuristicPrecision | DampingStyle::HeuristicVariance
        )
    }

    /// Whether cross-iteration covariances are propagated.
    pub fn tracks_cross_covariance(&self) -> bool {
        !self.is_heuristic()
    }

    /// Damping column `(θ_{A,0,t}, …, θ_{A,t,t})`.
    pub fn theta_a_column(&self, t: usize) -> Vec<f64> {
        self.column(self.theta_a, t)
    }

    /// Damping column `(θ_{B,0,t}, …, θ_{B,t,t})`.
    pub fn theta_b_column(&self, t: usize) -> Vec<f64> {
        self.column(self.theta_b, t)
    }

    fn column(&self, theta: f64, t: usize) -> Vec<f64> {
        match self.damping_style {
            DampingStyle::None => {
                let mut c = vec![0.0; t + 1];
                c[t] = 1.0;
                c
            }
            _ => geometric_column(theta, t),
        }
    }
}

/// Linear filter of module A.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    /// `W = v (σ² I + v A Aᵀ)⁻¹ A`.
    Lmmse,
    /// Matched filter `W = A`.
    MatchedFilter,
}

/// Estimator of the posterior covariance messages in module B.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceEstimator {
    /// Average of the pairwise posterior covariance `⟨C(s', s)⟩`.
    PosteriorCovariance,
    /// The consistent estimator built from denoiser outputs and derivatives.
    Consistent,
}

/// Ledgers to which the PSD guard is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardScope {
    /// Every extrinsic and message ledger.
    All,
    /// Only the extrinsic ledger of module B.
    ExtrinsicB,
    /// Never.
    Off,
}

/// Solver options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub policy: MemoryPolicy,
    pub filter: FilterKind,
    pub estimator: CovarianceEstimator,
    pub guard_scope: GuardScope,
    pub guard_eps: f64,
    pub t_max: usize,
    pub stop_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            policy: MemoryPolicy::full(),
            filter: FilterKind::Lmmse,
            estimator: CovarianceEstimator::PosteriorCovariance,
            guard_scope: GuardScope::All,
            guard_eps: PSD_GUARD_EPS,
            t_max: 64,
            stop_tol: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn with_policy(policy: MemoryPolicy) -> Self {
        SolverConfig {
            policy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if self.t_max == 0 {
            return Err(Error::invalid(
                "t_max",
                "at least one iteration is required",
            ));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::invalid("stop_tol", "must be non-negative"));
        }
        if !(self.guard_eps > 0.0) {
            return Err(Error::invalid("guard_eps", "must be positive"));
        }
        Ok(())
    }

    /// Heuristic policies keep no cross covariances to guard.
    fn guard_active(&self) -> bool {
        !self.policy.is_heuristic()
    }

    pub(crate) fn guard_all(&self) -> bool {
        self.guard_scope == GuardScope::All && self.guard_active()
    }

    pub(crate) fn guard_ext_b(&self) -> bool {
        self.guard_scope != GuardScope::Off && self.guard_active()
    }
}
