//! Experiment configuration: a flat TOML file plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lmoamp_core::lmoamp::{CovarianceEstimator, GuardScope, MemoryPolicy};
use lmoamp_core::problem::ProblemConfig;
use serde::Deserialize;

use crate::error::HarnessError;

/// Solver variant run on every trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    pub policy: MemoryPolicy,
}

impl Variant {
    /// Stable label used in reports, e.g. `damped:1:0.7`.
    pub fn label(&self) -> String {
        use lmoamp_core::lmoamp::{DampingStyle, MemoryMode};
        let p = &self.policy;
        match (p.mode, p.damping_style) {
            (MemoryMode::Full, _) => "full".to_string(),
            (MemoryMode::Latest, DampingStyle::None) => "oamp".to_string(),
            (MemoryMode::Latest, DampingStyle::CorrectCovariance) => {
                format!("damped:{}:{}", p.theta_a, p.theta_b)
            }
            (MemoryMode::Latest, DampingStyle::HeuristicPrecision) => {
                format!("heuristic-precision:{}:{}", p.theta_a, p.theta_b)
            }
            (MemoryMode::Latest, DampingStyle::HeuristicVariance) => {
                format!("heuristic-variance:{}:{}", p.theta_a, p.theta_b)
            }
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Variant {
    type Err = HarnessError;

    /// Parses `full`, `oamp`, `damped:θA:θB`, `heuristic-precision:θA:θB`
    /// or `heuristic-variance:θA:θB`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::Config(format!("unknown variant `{s}`"));
        let mut parts = s.split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let thetas: Vec<f64> = parts
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let policy = match (kind.trim(), thetas.as_slice()) {
            ("full", []) => MemoryPolicy::full(),
            ("oamp", []) => MemoryPolicy::oamp(),
            ("damped", [a, b]) => MemoryPolicy::damped(*a, *b)?,
            ("heuristic-precision", [a, b]) => MemoryPolicy::heuristic_precision(*a, *b)?,
            ("heuristic-variance", [a, b]) => MemoryPolicy::heuristic_variance(*a, *b)?,
            _ => return Err(bad()),
        };
        Ok(Variant { policy })
    }
}

/// On-disk form; every field except the problem parameters has a default.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: usize,
    m: Option<usize>,
    delta: Option<f64>,
    rho: f64,
    kappa: f64,
    snr_db: f64,
    variants: Vec<String>,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default = "default_t_max")]
    t_max: usize,
    #[serde(default)]
    seed: u64,
    output: Option<PathBuf>,
    #[serde(default)]
    sign_randomization: bool,
    #[serde(default = "default_guard")]
    guard_scope: String,
    #[serde(default = "default_estimator")]
    estimator: String,
}

fn default_trials() -> usize {
    50
}

fn default_t_max() -> usize {
    20
}

fn default_guard() -> String {
    "all".to_string()
}

fn default_estimator() -> String {
    "posterior".to_string()
}

/// Validated experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub rho: f64,
    pub kappa: f64,
    pub snr_db: f64,
    pub variants: Vec<Variant>,
    pub trials: usize,
    pub t_max: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub sign_randomization: bool,
    pub guard_scope: GuardScope,
    pub estimator: CovarianceEstimator,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.message().to_string()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, HarnessError> {
        let cfg_err = |msg: &str| HarnessError::Config(msg.to_string());
        if raw.n == 0 || !raw.n.is_power_of_two() {
            return Err(cfg_err("`n` must be a power of two"));
        }
        let (m, delta) = match (raw.m, raw.delta) {
            (Some(m), None) => (m, m as f64 / raw.n as f64),
            (None, Some(d)) => ((d * raw.n as f64).round() as usize, d),
            (Some(m), Some(d)) => {
                if m != (d * raw.n as f64).round() as usize {
                    return Err(cfg_err("`m` must equal round(delta * n)"));
                }
                (m, d)
            }
            (None, None) => return Err(cfg_err("one of `m` or `delta` is required")),
        };
        if raw.trials == 0 {
            return Err(cfg_err("`trials` must be at least 1"));
        }
        if raw.variants.is_empty() {
            return Err(cfg_err("at least one variant is required"));
        }
        let variants = raw
            .variants
            .iter()
            .map(|v| v.parse())
            .collect::<Result<Vec<Variant>, _>>()?;
        let guard_scope = match raw.guard_scope.as_str() {
            "all" => GuardScope::All,
            "extrinsic-b" => GuardScope::ExtrinsicB,
            "off" => GuardScope::Off,
            _ => return Err(cfg_err("`guard_scope` must be all, extrinsic-b or off")),
        };
        let estimator = match raw.estimator.as_str() {
            "posterior" => CovarianceEstimator::PosteriorCovariance,
            "consistent" => CovarianceEstimator::Consistent,
            _ => return Err(cfg_err("`estimator` must be posterior or consistent")),
        };
        let cfg = ExperimentConfig {
            n: raw.n,
            m,
            delta,
            rho: raw.rho,
            kappa: raw.kappa,
            snr_db: raw.snr_db,
            variants,
            trials: raw.trials,
            t_max: raw.t_max,
            seed: raw.seed,
            output: raw.output,
            sign_randomization: raw.sign_randomization,
            guard_scope,
            estimator,
        };
        cfg.problem().validate()?;
        if cfg.t_max == 0 {
            return Err(cfg_err("`t_max` must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn problem(&self) -> ProblemConfig {
        ProblemConfig {
            n: self.n,
            m: self.m,
            rho: self.rho,
            kappa: self.kappa,
            snr_db: self.snr_db,
            sign_randomization: self.sign_randomization,
        }
    }

    /// `key = value` pairs echoed into report headers.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let variants: Vec<String> = self.variants.iter().map(Variant::label).collect();
        vec![
            ("n", self.n.to_string()),
            ("m", self.m.to_string()),
            ("delta", self.delta.to_string()),
            ("rho", self.rho.to_string()),
            ("kappa", self.kappa.to_string()),
            ("snr_db", self.snr_db.to_string()),
            ("variants", variants.join(",")),
            ("trials", self.trials.to_string()),
            ("t_max", self.t_max.to_string()),
            ("seed", self.seed.to_string()),
            ("sign_randomization", self.sign_randomization.to_string()),
            ("guard_scope", format!("{:?}", self.guard_scope)),
            ("estimator", format!("{:?}", self.estimator)),
        ]
    }
}
