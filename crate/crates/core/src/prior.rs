//! Bernoulli-Gaussian prior and its Bayes-optimal scalar denoiser.
//!
//! A signal element is `x ~ N(0, 1/ρ)` with probability `ρ` and `0`
//! otherwise, so `E[x²] = 1`. Observations are `s = x + z` with
//! `z ~ N(0, v)`. Pairs of observations `(s', s)` with jointly Gaussian
//! noise are reduced to the scalar sufficient statistic
//! `S = w' s' + w s` before the posterior is evaluated.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;

/// Legendre points per panel of the composite rule over the marginal of `s`.
const LEGENDRE_ORDER: usize = 24;
/// Hermite points for the inner integral over the rank-one residual.
const HERMITE_ORDER: usize = 63;
/// Panel breakpoints in units of each mixture component's standard deviation.
const BREAKS: [f64; 14] = [
    0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0, 12.0,
];
/// Relative threshold below which two noises are treated as identical.
const DUPLICATE_TOL: f64 = 1e-12;

/// Bernoulli-Gaussian prior with density `rho` and unit second moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BgPrior {
    rho: f64,
    component_variance: f64,
}

impl BgPrior {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::invalid("rho", "density must lie in (0, 1]"));
        }
        Ok(BgPrior {
            rho,
            component_variance: 1.0 / rho,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Variance `1/ρ` of the active component.
    pub fn component_variance(&self) -> f64 {
        self.component_variance
    }

    /// `E[x²]`.
    pub fn second_moment(&self) -> f64 {
        self.rho * self.component_variance
    }

    /// Posterior of `x` given `s = x + z`, `z ~ N(0, v)`.
    pub fn posterior(&self, v: f64) -> Result<BgPosterior> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(
                "v",
                "noise variance must be positive and finite",
            ));
        }
        let va = self.component_variance;
        let g = va / (va + v);
        let log_prior_odds = if self.rho < 1.0 {
            libm::log(self.rho) - libm::log1p(-self.rho) - 0.5 * libm::log1p(va / v)
        } else {
            f64::INFINITY
        };
        Ok(BgPosterior {
            v,
            g,
            h: v / (va + v),
            c: g * v,
            log_prior_odds,
        })
    }

    /// Denoises a whole vector at noise variance `v`.
    pub fn denoise(&self, s: &[f64], v: f64) -> Result<DenoiserEval> {
        let post = self.posterior(v)?;
        let mut mean = Vec::with_capacity(s.len());
        let mut var_sum = 0.0;
        for &si in s {
            let (m, var) = post.moments(si);
            mean.push(m);
            var_sum += var;
        }
        let n = s.len().max(1) as f64;
        let posterior_var = var_sum / n;
        Ok(DenoiserEval {
            mean,
            derivative_avg: posterior_var / v,
            posterior_var,
        })
    }
}

/// Output of the denoiser applied to a vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserEval {
    /// `f(s)` element-wise.
    pub mean: Vec<f64>,
    /// `⟨f'(s)⟩`.
    pub derivative_avg: f64,
    /// `⟨Var(x | s)⟩`.
    pub posterior_var: f64,
}

/// Posterior of a BG element at a fixed noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BgPosterior {
    v: f64,
    /// Shrinkage `va / (va + v)` of the active component.
    g: f64,
    /// `1 − g = v / (va + v)`, kept separately to avoid cancellation.
    h: f64,
    /// Posterior variance `va v / (va + v)` of the active component.
    c: f64,
    /// `ln(ρ/(1−ρ)) − ½ ln((va+v)/v)`; infinite for a Gaussian prior.
    log_prior_odds: f64,
}

/// `(1/(1+e^{-l}), 1/(1+e^{l}))` without overflow.
fn sigmoid_pair(l: f64) -> (f64, f64) {
    if l == f64::INFINITY {
        return (1.0, 0.0);
    }
    if l >= 0.0 {
        let e = libm::exp(-l);
        (1.0 / (1.0 + e), e / (1.0 + e))
    } else {
        let e = libm::exp(l);
        (e / (1.0 + e), 1.0 / (1.0 + e))
    }
}

impl BgPosterior {
    pub fn noise_variance(&self) -> f64 {
        self.v
    }

    /// Posterior probability that the element is active.
    pub fn activity(&self, s: f64) -> f64 {
        self.activity_pair(s).0
    }

    fn activity_pair(&self, s: f64) -> (f64, f64) {
        sigmoid_pair(self.log_prior_odds + 0.5 * s * s * self.g / self.v)
    }

    /// `E[x | s]`.
    pub fn mean(&self, s: f64) -> f64 {
        self.activity(s) * self.g * s
    }

    /// `(E[x | s], Var(x | s))`.
    pub fn moments(&self, s: f64) -> (f64, f64) {
        let (p, q) = self.activity_pair(s);
        let gs = self.g * s;
        (p * gs, p * self.c + p * q * gs * gs)
    }

    /// `Var(x | s)`.
    pub fn variance(&self, s: f64) -> f64 {
        self.moments(s).1
    }

    /// `d E[x | s] / ds`, equal to `Var(x | s) / v`.
    pub fn derivative(&self, s: f64) -> f64 {
        self.variance(s) / self.v
    }

    /// `s − E[x | s]`, formed without cancelling `s` against the mean.
    pub fn residual(&self, s: f64) -> f64 {
        let (_, q) = self.activity_pair(s);
        (self.h + q * self.g) * s
    }

    /// `(f(s), f'(s))`.
    pub fn mean_and_derivative(&self, s: f64) -> (f64, f64) {
        let (m, var) = self.moments(s);
        (m, var / self.v)
    }
}

/// `E[x | x + z = s]` with `z ~ N(0, v)`.
pub fn bg_posterior_mean(s: f64, v: f64, prior: &BgPrior) -> Result<f64> {
    Ok(prior.posterior(v)?.mean(s))
}

/// Derivative of [`bg_posterior_mean`] with respect to `s`.
pub fn bg_posterior_mean_derivative(s: f64, v: f64, prior: &BgPrior) -> Result<f64> {
    Ok(prior.posterior(v)?.derivative(s))
}

/// `Var(x | x + z = s)`.
pub fn bg_posterior_variance(s: f64, v: f64, prior: &BgPrior) -> Result<f64> {
    Ok(prior.posterior(v)?.variance(s))
}

/// `E[(x − f(x + z))²]` for `z ~ N(0, v)`.
pub fn bg_mmse(v: f64, prior: &BgPrior) -> Result<f64> {
    BgIntegrator::new(*prior).mmse(v)
}

/// Reduction of two correlated observations of the same element to a
/// scalar sufficient statistic plus a rank-one residual.
///
/// The noise covariance is `[[v_prev, c], [c, v]]` for `(s_prev, s)`. With
/// `S = w_prev s_prev + w s` and noise variance `v_S`, the residuals
/// `s_prev − S` and `s − S` are independent of `S` and equal
/// `(a_prev u, a u)` for a standard normal `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairReduction {
    pub v_prev: f64,
    pub v: f64,
    /// Weight of `s_prev` in `S`; the weight of `s` is `1 − w_prev`.
    pub w_prev: f64,
    pub v_suf: f64,
    pub a_prev: f64,
    pub a: f64,
}

impl PairReduction {
    pub fn new(v_prev: f64, c: f64, v: f64) -> Result<Self> {
        if !(v_prev > 0.0 && v > 0.0) || !c.is_finite() || !v_prev.is_finite() || !v.is_finite() {
            return Err(Error::invalid(
                "noise covariance",
                "diagonal must be positive and finite",
            ));
        }
        // Parametrize around the smaller variance `vb`; `vo` is the other.
        let prev_is_base = v_prev < v;
        let (vo, vb) = if prev_is_base {
            (v, v_prev)
        } else {
            (v_prev, v)
        };
        let d = vo - vb;
        let e = c - vb;
        let denom = d - 2.0 * e;
        if denom.abs() <= DUPLICATE_TOL * vb {
            // Identical noises: either observation alone is sufficient.
            let w_prev = if prev_is_base { 1.0 } else { 0.0 };
            return Ok(PairReduction {
                v_prev,
                v,
                w_prev,
                v_suf: vb,
                a_prev: 0.0,
                a: 0.0,
            });
        }
        if denom < 0.0 {
            return Err(Error::NonNestedSingular);
        }
        let r = e / denom;
        let v_suf = vb - e * r;
        if !(v_suf > DUPLICATE_TOL * vb) {
            return Err(Error::NonNestedSingular);
        }
        let w_other = -r;
        let d_other = d + e * r;
        let e_res = r * (d - e);
        // Rank-one factor; `d_other ≥ d_base` because `d ≥ 0`.
        let a_other = libm::sqrt(d_other.max(0.0));
        let a_base = if a_other > 0.0 { e_res / a_other } else { 0.0 };
        let (w_prev, a_prev, a) = if prev_is_base {
            (1.0 - w_other, a_base, a_other)
        } else {
            (w_other, a_other, a_base)
        };
        Ok(PairReduction {
            v_prev,
            v,
            w_prev,
            v_suf,
            a_prev,
            a,
        })
    }

    /// `S` for one observation pair.
    pub fn statistic(&self, s_prev: f64, s: f64) -> f64 {
        s + self.w_prev * (s_prev - s)
    }

    fn negligible_residual(&self) -> bool {
        let scale = libm::sqrt(self.v_suf);
        self.a_prev.abs().min(self.a.abs()) <= DUPLICATE_TOL * scale
    }
}

/// Pairwise posterior covariance evaluator for a fixed noise covariance.
#[derive(Debug, Clone, Copy)]
pub struct PairPosterior {
    pub reduction: PairReduction,
    post_prev: BgPosterior,
    post: BgPosterior,
    post_suf: BgPosterior,
}

impl PairPosterior {
    pub fn new(prior: &BgPrior, v_prev: f64, c: f64, v: f64) -> Result<Self> {
        let reduction = PairReduction::new(v_prev, c, v)?;
        Ok(PairPosterior {
            reduction,
            post_prev: prior.posterior(v_prev)?,
            post: prior.posterior(v)?,
            post_suf: prior.posterior(reduction.v_suf)?,
        })
    }

    /// `C(s_prev, s) = E[(x − f_prev(s_prev))(x − f(s)) | s_prev, s]`.
    pub fn covariance(&self, s_prev: f64, s: f64) -> f64 {
        let big_s = self.reduction.statistic(s_prev, s);
        let (m, var) = self.post_suf.moments(big_s);
        var + (m - self.post_prev.mean(s_prev)) * (m - self.post.mean(s))
    }
}

/// `C(s_prev, s)` for noise covariance `[[v_prev, c], [c, v]]`.
///
/// When `c = v ≤ v_prev` the later observation is sufficient and the result
/// equals `Var(x | s)`.
pub fn bg_posterior_covariance(
    s_prev: f64,
    s: f64,
    v_prev: f64,
    c: f64,
    v: f64,
    prior: &BgPrior,
) -> Result<f64> {
    Ok(PairPosterior::new(prior, v_prev, c, v)?.covariance(s_prev, s))
}

/// Expectations over the BG observation model by quadrature.
///
/// The outer integral runs over the marginal of `s`, a two-component
/// Gaussian mixture, with a composite Legendre rule whose panels are scaled
/// to both components. Posterior quantities switch between the sparse and
/// active regimes on the scale `√v`, which a single global Hermite rule
/// does not resolve for small `v`.
#[derive(Debug, Clone)]
pub struct BgIntegrator {
    prior: BgPrior,
    legendre: GaussRule,
    hermite: GaussRule,
}

impl BgIntegrator {
    pub fn new(prior: BgPrior) -> Self {
        BgIntegrator {
            prior,
            legendre: GaussRule::legendre(LEGENDRE_ORDER),
            hermite: GaussRule::hermite(HERMITE_ORDER),
        }
    }

    pub fn prior(&self) -> &BgPrior {
        &self.prior
    }

    fn breakpoints(&self, v: f64) -> Vec<f64> {
        let sd_small = libm::sqrt(v);
        let sd_big = libm::sqrt(self.prior.component_variance + v);
        let limit = 12.0 * sd_big;
        let mut pts: Vec<f64> = Vec::with_capacity(4 * BREAKS.len() + 3);
        pts.push(0.0);
        for &k in &BREAKS {
            for sd in [sd_small, sd_big] {
                let p = k * sd;
                if p < limit {
                    pts.push(p);
                    pts.push(-p);
                }
            }
        }
        pts.push(limit);
        pts.push(-limit);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * limit);
        pts
    }

    /// `E[g(s)]` for `s = x + z`, `z ~ N(0, v)`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, v: f64, mut g: F) -> f64 {
        let rho = self.prior.rho;
        let v_big = self.prior.component_variance + v;
        let norm_small = 1.0 / libm::sqrt(2.0 * core::f64::consts::PI * v);
        let norm_big = 1.0 / libm::sqrt(2.0 * core::f64::consts::PI * v_big);
        let breaks = self.breakpoints(v);
        self.legendre.integrate_composite(&breaks, |s| {
            let s2 = s * s;
            let mut p = rho * norm_big * libm::exp(-0.5 * s2 / v_big);
            if rho < 1.0 {
                p += (1.0 - rho) * norm_small * libm::exp(-0.5 * s2 / v);
            }
            if p == 0.0 {
                0.0
            } else {
                p * g(s)
            }
        })
    }

    /// `E[(x − f(s))²] = E[Var(x | s)]`.
    pub fn mmse(&self, v: f64) -> Result<f64> {
        let post = self.prior.posterior(v)?;
        Ok(self.expect(v, |s| post.variance(s)))
    }

    /// `1 − E[f'(s)]` evaluated as `E[(s − f(s))²] / v`. The two agree by
    /// Tweedie's formula; this form stays accurate when `E[f']` is near 1.
    pub fn derivative_complement(&self, v: f64) -> Result<f64> {
        let post = self.prior.posterior(v)?;
        Ok(self.expect(v, |s| {
            let r = post.residual(s);
            r * r
        }) / v)
    }

    /// `E[f'(s)]`, the average denoiser derivative.
    pub fn mean_derivative(&self, v: f64) -> Result<f64> {
        let post = self.prior.posterior(v)?;
        Ok(self.expect(v, |s| post.derivative(s)))
    }

    /// `E[x (x − f(s))] = E[x²] − E[f(s) E[x | s]]`.
    pub fn signal_error_correlation(&self, v: f64) -> Result<f64> {
        let post = self.prior.posterior(v)?;
        let m2 = self.prior.second_moment();
        Ok(m2
            - self.expect(v, |s| {
                let f = post.mean(s);
                f * f
            }))
    }

    /// `E[(x − f_prev(s_prev))(x − f(s))]` for observation noise covariance
    /// `[[v_prev, c], [c, v]]`, each denoiser matched to its own variance.
    pub fn expected_covariance(&self, v_prev: f64, c: f64, v: f64) -> Result<f64> {
        let pair = PairPosterior::new(&self.prior, v_prev, c, v)?;
        let red = pair.reduction;
        if red.negligible_residual() {
            // One observation is (numerically) the sufficient statistic.
            return self.mmse(red.v_suf);
        }
        let (a_prev, a) = (red.a_prev, red.a);
        let hermite = &self.hermite;
        let post_suf = pair.post_suf;
        let post_prev = pair.post_prev;
        let post = pair.post;
        Ok(self.expect(red.v_suf, |big_s| {
            let (m, var) = post_suf.moments(big_s);
            let mut cross = 0.0;
            for (u, w) in hermite.nodes.iter().zip(&hermite.weights) {
                cross +=
                    w * (m - post_prev.mean(big_s + a_prev * u)) * (m - post.mean(big_s + a * u));
            }
            var + cross
        }))
    }
}

/// Interface for separable denoisers driven by the solver.
pub trait ScalarDenoiser: Sync {
    /// `E[x²]` under the prior.
    fn second_moment(&self) -> f64;

    /// `f(s)` and `⟨f'(s)⟩`, `⟨Var(x | s)⟩` over a vector at noise variance `v`.
    fn denoise(&self, s: &[f64], v: f64) -> Result<DenoiserEval>;

    /// `⟨C(s_prev, s)⟩` over paired vectors for noise covariance
    /// `[[v_prev, c], [c, v]]`.
    fn average_posterior_covariance(
        &self,
        s_prev: &[f64],
        s: &[f64],
        v_prev: f64,
        c: f64,
        v: f64,
    ) -> Result<f64>;
}

impl ScalarDenoiser for BgPrior {
    fn second_moment(&self) -> f64 {
        BgPrior::second_moment(self)
    }

    fn denoise(&self, s: &[f64], v: f64) -> Result<DenoiserEval> {
        BgPrior::denoise(self, s, v)
    }

    fn average_posterior_covariance(
        &self,
        s_prev: &[f64],
        s: &[f64],
        v_prev: f64,
        c: f64,
        v: f64,
    ) -> Result<f64> {
        if s_prev.len() != s.len() {
            return Err(Error::DimensionMismatch {
                expected: s.len(),
                actual: s_prev.len(),
            });
        }
        let pair = PairPosterior::new(self, v_prev, c, v)?;
        let sum: f64 = s_prev
            .iter()
            .zip(s)
            .map(|(&a, &b)| pair.covariance(a, b))
            .sum();
        Ok(sum / s.len().max(1) as f64)
    }
}

/// One sample of the consistent covariance estimator
/// `E[x²] + f_prev f + c f'(s) − s_prev f + c f_prev'(s_prev) − s f_prev`,
/// where `(f, f')` are evaluated at `s` and `(f_prev, f_prev')` at `s_prev`.
pub fn consistent_cov_sample(
    second_moment: f64,
    w_cov: f64,
    s_prev: f64,
    s: f64,
    f_prev: (f64, f64),
    f: (f64, f64),
) -> f64 {
    second_moment + f_prev.0 * f.0 + w_cov * f.1 - s_prev * f.0 + w_cov * f_prev.1 - s * f_prev.0
}

/// Sample average of [`consistent_cov_sample`]; estimates
/// `E[(x − f_prev(s_prev))(x − f(s))]` without knowing `x`.
pub fn consistent_cov_estimate<F, G>(
    s_prev: &[f64],
    s: &[f64],
    w_cov: f64,
    second_moment: f64,
    f_prev: F,
    f: G,
) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
    G: Fn(f64) -> (f64, f64),
{
    if s.is_empty() {
        return Err(Error::invalid(
            "samples",
            "at least one sample pair is required",
        ));
    }
    if s_prev.len() != s.len() {
        return Err(Error::DimensionMismatch {
            expected: s.len(),
            actual: s_prev.len(),
        });
    }
    let sum: f64 = s_prev
        .iter()
        .zip(s)
        .map(|(&a, &b)| consistent_cov_sample(second_moment, w_cov, a, b, f_prev(a), f(b)))
        .sum();
    Ok(sum / s.len() as f64)
}
