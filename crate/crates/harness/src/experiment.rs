//! Seeded Monte Carlo trials, state-evolution predictions and reports.

use std::fmt::Write as _;
use std::path::Path;

use lmoamp_core::lmoamp::{run, DampingStyle, MemoryMode, SolverConfig};
use lmoamp_core::prior::BgPrior;
use lmoamp_core::problem::sample_problem;
use lmoamp_core::state_evolution::{se_bayes, se_damped_oamp, SpectrumModel};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Variant};
use crate::error::HarnessError;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "LMOAMP_WORKERS";

/// CSV column header.
pub const CSV_HEADER: &str = "variant,iteration,mse_sim_db,stderr_db,mse_se_db,gap_db";

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under root seed `root`.
pub fn trial_seed(root: u64, trial: usize) -> u64 {
    splitmix64(root ^ splitmix64(trial as u64))
}

/// Worker count from [`WORKERS_ENV`], defaulting to the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Per-variant MSE trajectories of one trial; failed runs carry the error.
pub type TrialOutcome = Vec<Result<Vec<f64>, String>>;

/// Runs every variant on one shared problem instance.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> TrialOutcome {
    let prior = match BgPrior::new(cfg.rho) {
        Ok(p) => p,
        Err(e) => return vec![Err(e.to_string()); cfg.variants.len()],
    };
    let problem = match sample_problem(&cfg.problem(), trial_seed(cfg.seed, trial)) {
        Ok(p) => p,
        Err(e) => return vec![Err(e.to_string()); cfg.variants.len()],
    };
    cfg.variants
        .iter()
        .map(|v| {
            let sc = SolverConfig {
                policy: v.policy,
                estimator: cfg.estimator,
                guard_scope: cfg.guard_scope,
                t_max: cfg.t_max,
                ..SolverConfig::default()
            };
            run(&problem, &prior, &sc)
                .map(|st| pad(st.mse, cfg.t_max))
                .map_err(|e| e.to_string())
        })
        .collect()
}

/// Extends an early-stopped trajectory with its last value.
fn pad(mut mse: Vec<f64>, len: usize) -> Vec<f64> {
    if let Some(&last) = mse.last() {
        mse.resize(len, last);
    }
    mse
}

/// Runs all trials on the worker pool; the result is ordered by trial index.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialOutcome>, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    Ok(pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, t))
            .collect()
    }))
}

/// State-evolution prediction of the MSE of `variant`, one value per
/// iteration. Heuristic variants are compared with the correct-covariance
/// prediction for the same damping factors.
pub fn se_prediction(cfg: &ExperimentConfig, variant: &Variant) -> Result<Vec<f64>, HarnessError> {
    let spectrum = SpectrumModel::empirical(cfg.problem().profile()?);
    let prior = BgPrior::new(cfg.rho)?;
    let sigma2 = cfg.problem().sigma2();
    let p = &variant.policy;
    let tr = match (p.mode, p.damping_style) {
        (MemoryMode::Full, _) | (MemoryMode::Latest, DampingStyle::None) => {
            se_bayes(cfg.t_max, &spectrum, sigma2, &prior)?
        }
        _ => se_damped_oamp(p.theta_a, p.theta_b, cfg.t_max, &spectrum, sigma2, &prior)?,
    };
    Ok(tr.mse)
}

/// One report line.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub variant: String,
    /// 1-based count of completed iterations.
    pub iteration: usize,
    pub mse_sim_db: f64,
    pub stderr_db: f64,
    pub mse_se_db: f64,
    pub gap_db: f64,
}

/// Per-variant trial accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub variant: String,
    pub included: usize,
    pub excluded: usize,
    /// First error message among excluded trials.
    pub first_error: Option<String>,
}

/// Aggregated experiment results.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub echo: Vec<(&'static str, String)>,
    pub rows: Vec<ReportRow>,
    pub summaries: Vec<VariantSummary>,
}

impl ExperimentReport {
    /// Rows of one variant.
    pub fn variant_rows<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.variant == label)
    }

    /// Largest `gap_db` of `label` over iterations `1..=max_iteration`.
    pub fn max_gap(&self, label: &str, max_iteration: usize) -> f64 {
        self.variant_rows(label)
            .filter(|r| r.iteration <= max_iteration)
            .map(|r| r.gap_db)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV text: `# key = value` comment lines, the header, then the rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.echo {
            let _ = writeln!(out, "# {k} = {v}");
        }
        for s in &self.summaries {
            let _ = writeln!(out, "# excluded[{}] = {}", s.variant, s.excluded);
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{:.6}",
                r.variant, r.iteration, r.mse_sim_db, r.stderr_db, r.mse_se_db, r.gap_db
            );
        }
        out
    }

    /// Writes the CSV, replacing any existing file.
    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_csv()).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Aggregates trial outcomes: linear MSE is averaged before conversion to
/// dB, and the standard error is mapped to dB by the delta method.
pub fn aggregate(
    cfg: &ExperimentConfig,
    outcomes: &[TrialOutcome],
    predictions: &[Vec<f64>],
) -> ExperimentReport {
    let mut rows = Vec::with_capacity(cfg.variants.len() * cfg.t_max);
    let mut summaries = Vec::with_capacity(cfg.variants.len());
    for (k, variant) in cfg.variants.iter().enumerate() {
        let label = variant.label();
        let ok: Vec<&Vec<f64>> = outcomes.iter().filter_map(|o| o[k].as_ref().ok()).collect();
        let first_error = outcomes.iter().find_map(|o| o[k].as_ref().err().cloned());
        summaries.push(VariantSummary {
            variant: label.clone(),
            included: ok.len(),
            excluded: outcomes.len() - ok.len(),
            first_error,
        });
        for t in 0..cfg.t_max {
            let n = ok.len() as f64;
            let mean = ok.iter().map(|m| m[t]).sum::<f64>() / n;
            let se = if ok.len() > 1 {
                let var = ok.iter().map(|m| (m[t] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            let sim_db = db(mean);
            let se_db = db(predictions[k][t]);
            rows.push(ReportRow {
                variant: label.clone(),
                iteration: t + 1,
                mse_sim_db: sim_db,
                stderr_db: 10.0 / std::f64::consts::LN_10 * se / mean,
                mse_se_db: se_db,
                gap_db: (sim_db - se_db).abs(),
            });
        }
    }
    ExperimentReport {
        echo: cfg.echo(),
        rows,
        summaries,
    }
}

/// Runs the experiment and, when `cfg.output` is set, writes the CSV.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let predictions = cfg
        .variants
        .iter()
        .map(|v| se_prediction(cfg, v))
        .collect::<Result<Vec<_>, _>>()?;
    let outcomes = run_trials(cfg)?;
    let report = aggregate(cfg, &outcomes, &predictions);
    if let Some(path) = &cfg.output {
        report.write_csv(path)?;
    }
    Ok(report)
}
