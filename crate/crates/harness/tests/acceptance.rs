//! Acceptance criteria A1 to A9, one PASS/FAIL line each.
//!
//! Runs as a plain binary so every criterion reports even when an earlier
//! one fails; the process exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use lmoamp_core::gaussian_stat::damping_covariance;
use lmoamp_core::lmoamp::{MemoryPolicy, SolverConfig};
use lmoamp_core::prior::{bg_mmse, consistent_cov_estimate, consistent_cov_sample, BgPrior};
use lmoamp_core::problem::{sample_bg, SpectralProfile};
use lmoamp_core::state_evolution::{
    bayes_fixed_point, eta_geometric, se_bayes, se_general, SpectrumModel,
};
use lmoamp_harness::{run_experiment, ExperimentConfig, ExperimentReport};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

#[path = "../../core/tests/support/dense.rs"]
mod dense;

type Verdict = Result<String, String>;

fn grid() -> Vec<(f64, f64, f64, f64)> {
    let mut g = Vec::new();
    for delta in [0.5, 1.0] {
        for kappa in [10.0, 1e3] {
            for rho in [0.1, 1.0] {
                for snr in [20.0, 40.0] {
                    g.push((delta, kappa, rho, snr));
                }
            }
        }
    }
    g
}

fn sigma2(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    if took < limit {
        Ok(took)
    } else {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn a1() -> Verdict {
    let start = Instant::now();
    let iterations = 32;
    let mut worst: f64 = 0.0;
    for (delta, kappa, rho, snr) in grid() {
        let spec = SpectrumModel::geometric(delta, kappa).map_err(|e| e.to_string())?;
        let prior = BgPrior::new(rho).map_err(|e| e.to_string())?;
        let cfg = SolverConfig {
            t_max: iterations,
            ..SolverConfig::with_policy(MemoryPolicy::full())
        };
        let g = se_general(&cfg, &spec, sigma2(snr), &prior).map_err(|e| e.to_string())?;
        let b = se_bayes(iterations, &spec, sigma2(snr), &prior).map_err(|e| e.to_string())?;
        if g.mse.len() != iterations || b.mse.len() != iterations {
            return Err(format!(
                "short trajectory at {:?}",
                (delta, kappa, rho, snr)
            ));
        }
        for t in 0..iterations {
            worst = worst
                .max(rel(g.v_ba[t], b.v_ba[t]))
                .max(rel(g.v_ab[t], b.v_ab[t]))
                .max(rel(g.mse[t], b.mse[t]));
        }
    }
    let took = within(Duration::from_secs(10), start)?;
    if worst < 1e-8 {
        Ok(format!(
            "max rel gap {worst:.2e} over 16 settings x {iterations} iterations in {took:.2?}"
        ))
    } else {
        Err(format!("max rel gap {worst:.2e}"))
    }
}

fn a2() -> Verdict {
    let start = Instant::now();
    let mut most = 0;
    for (delta, kappa, rho, snr) in grid() {
        let spec = SpectrumModel::geometric(delta, kappa).map_err(|e| e.to_string())?;
        let prior = BgPrior::new(rho).map_err(|e| e.to_string())?;
        let fp = bayes_fixed_point(&spec, sigma2(snr), &prior, 1e-12, 10_000)
            .map_err(|e| format!("{:?}: {e}", (delta, kappa, rho, snr)))?;
        if !fp.converged {
            return Err(format!("no convergence at {:?}", (delta, kappa, rho, snr)));
        }
        most = most.max(fp.iterations);
    }
    let took = within(Duration::from_secs(10), start)?;
    Ok(format!(
        "monotone and converged on all 16 settings, at most {most} iterations, {took:.2?}"
    ))
}

/// Per-trial MSE at N = 4096 spreads by about 2 dB, so the 50-trial mean
/// carries about 0.27 dB of sampling error. 400 trials bring that to about
/// 0.1 dB and leave the finite-size bias as the measured gap.
const SIM_TRIALS: usize = 400;

fn simulation_config() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(
        r#"
        n = 4096
        m = 2048
        rho = 0.1
        kappa = 1000.0
        snr_db = 40.0
        variants = ["full", "damped:1:0.7", "heuristic-variance:1:0.7", "heuristic-precision:1:0.7"]
        t_max = 21
        seed = 2024
        "#,
    )
    .map(|c| ExperimentConfig {
        trials: SIM_TRIALS,
        ..c
    })
    .expect("valid acceptance configuration")
}

/// Max gap of `label` over iterations 1..=21, which covers t ≤ 20 whether
/// t counts from zero or one; all trials must be included.
fn simulated_gap(report: &ExperimentReport, label: &str) -> Result<f64, String> {
    let s = report
        .summaries
        .iter()
        .find(|s| s.variant == label)
        .ok_or_else(|| format!("missing variant {label}"))?;
    if s.excluded > 0 {
        return Err(format!(
            "{label}: {} trials excluded ({})",
            s.excluded,
            s.first_error.clone().unwrap_or_default()
        ));
    }
    let gap = report.max_gap(label, 21);
    if gap.is_finite() {
        Ok(gap)
    } else {
        Err(format!("{label}: non-finite gap"))
    }
}

fn a3(report: &ExperimentReport) -> Verdict {
    let gap = simulated_gap(report, "full")?;
    if gap < 0.5 {
        Ok(format!(
            "full memory: max |sim - SE| {gap:.3} dB over 21 iterations, {SIM_TRIALS} trials"
        ))
    } else {
        Err(format!("full memory: max gap {gap:.3} dB"))
    }
}

fn a4(report: &ExperimentReport) -> Verdict {
    let gap = simulated_gap(report, "damped:1:0.7")?;
    let hv = simulated_gap(report, "heuristic-variance:1:0.7")
        .map(|g| format!("{g:.3} dB"))
        .unwrap_or_else(|e| e);
    let hp = simulated_gap(report, "heuristic-precision:1:0.7")
        .map(|g| format!("{g:.3} dB"))
        .unwrap_or_else(|e| e);
    let detail = format!(
        "damped: max gap {gap:.3} dB; heuristic deviation from correct SE: variance {hv}, precision {hp}"
    );
    if gap < 0.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn a5() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let size = 2 + k % 7;
        let g = DMatrix::from_fn(size, size, |_, _| rng.sample::<f64, _>(StandardNormal));
        let c = &g * g.transpose() + DMatrix::identity(size, size) * 0.05;
        let mut theta = DMatrix::from_fn(size, size, |i, j| {
            if i <= j {
                rng.random_range(0.05..1.0)
            } else {
                0.0
            }
        });
        for j in 0..size {
            let sum: f64 = theta.column(j).sum();
            theta.column_mut(j).unscale_mut(sum);
        }
        let v = damping_covariance(&c, &theta).map_err(|e| e.to_string())?;
        let ones = DVector::from_element(size, 1.0);
        let qc = ones.dot(&(c.try_inverse().ok_or("singular C")? * &ones));
        let qv = ones.dot(&(v.try_inverse().ok_or("singular V")? * &ones));
        worst = worst.max(rel(qv, qc));
    }
    let took = within(Duration::from_secs(1), start)?;
    if worst < 1e-8 {
        Ok(format!(
            "max rel gap {worst:.2e} over 200 pairs in {took:.2?}"
        ))
    } else {
        Err(format!("max rel gap {worst:.2e}"))
    }
}

fn a6() -> Verdict {
    let rho = 0.1;
    let prior = BgPrior::new(rho).map_err(|e| e.to_string())?;
    let n = 1_000_000;
    let mut lines = Vec::new();
    let mut ok = true;
    for (k, (v_prev, c, v)) in [(0.5, 0.2, 0.3), (0.2, 0.15, 0.15), (1.0, -0.1, 0.4)]
        .into_iter()
        .enumerate()
    {
        let mut rng = ChaCha12Rng::seed_from_u64(600 + k as u64);
        let x = sample_bg(n, rho, &mut rng);
        let l = DMatrix::from_row_slice(2, 2, &[v_prev, c, c, v])
            .cholesky()
            .ok_or("noise covariance not positive definite")?
            .l();
        let mut s_prev = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        for xi in &x {
            let g0: f64 = rng.sample(StandardNormal);
            let g1: f64 = rng.sample(StandardNormal);
            s_prev.push(xi + l[(0, 0)] * g0);
            s.push(xi + l[(1, 0)] * g0 + l[(1, 1)] * g1);
        }
        let p_prev = prior.posterior(v_prev).map_err(|e| e.to_string())?;
        let p = prior.posterior(v).map_err(|e| e.to_string())?;
        let est = consistent_cov_estimate(
            &s_prev,
            &s,
            c,
            prior.second_moment(),
            |a| p_prev.mean_and_derivative(a),
            |b| p.mean_and_derivative(b),
        )
        .map_err(|e| e.to_string())?;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                consistent_cov_sample(
                    prior.second_moment(),
                    c,
                    s_prev[i],
                    s[i],
                    p_prev.mean_and_derivative(s_prev[i]),
                    p.mean_and_derivative(s[i]),
                )
            })
            .collect();
        let direct: Vec<f64> = (0..n)
            .map(|i| (x[i] - p_prev.mean(s_prev[i])) * (x[i] - p.mean(s[i])))
            .collect();
        let (_, se_est) = mean_se(&samples);
        let (m_dir, se_dir) = mean_se(&direct);
        let combined = (se_est * se_est + se_dir * se_dir).sqrt();
        let z = (est - m_dir).abs() / combined;
        ok &= z < 3.0;
        lines.push(format!("{z:.2}"));
    }
    let detail = format!("|estimate - direct| / combined SE = [{}]", lines.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn a7() -> Verdict {
    let mut worst: f64 = 0.0;
    for kappa in [10.0, 1e3, 1e4] {
        let p = SpectralProfile::geometric(1 << 12, 1 << 13, kappa).map_err(|e| e.to_string())?;
        for x in [0.1, 1.0, 10.0, 1e4] {
            let closed = eta_geometric(x, 0.5, kappa).map_err(|e| e.to_string())?;
            worst = worst.max((closed - p.eta(x)).abs());
        }
    }
    if worst < 1e-3 {
        Ok(format!("max abs gap {worst:.2e} over 12 points"))
    } else {
        Err(format!("max abs gap {worst:.2e}"))
    }
}

fn a8() -> Verdict {
    let cases = dense::cases();
    let count = cases.len();
    for (cfg, seed) in cases {
        dense::check(cfg, seed);
    }
    Ok(format!(
        "{count} instances agree to 1e-10 over 3 iterations"
    ))
}

fn a9() -> Verdict {
    let mut rng = ChaCha12Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rho: f64 = rng.random_range(0.01..=1.0);
        let v: f64 = rng.random_range(0.01..2.0);
        let s: f64 = rng.random_range(-5.0..5.0);
        let post = BgPrior::new(rho)
            .and_then(|p| p.posterior(v))
            .map_err(|e| e.to_string())?;
        let h = 1e-5;
        let fd = (post.mean(s + h) - post.mean(s - h)) / (2.0 * h);
        worst = worst.max((post.derivative(s) - fd).abs());
    }
    if worst >= 1e-6 {
        return Err(format!("finite-difference gap {worst:.2e}"));
    }
    let (rho, v) = (0.1, 0.3);
    let prior = BgPrior::new(rho).map_err(|e| e.to_string())?;
    let post = prior.posterior(v).map_err(|e| e.to_string())?;
    let n = 1_000_000;
    let x = sample_bg(n, rho, &mut rng);
    let derivs: Vec<f64> = x
        .iter()
        .map(|xi| post.derivative(xi + v.sqrt() * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let (xi_b, se) = mean_se(&derivs);
    let target = bg_mmse(v, &prior).map_err(|e| e.to_string())? / v;
    let z = (xi_b - target).abs() / se;
    let detail = format!(
        "finite-difference gap {worst:.2e}; xi_B {xi_b:.5} vs mmse/v {target:.5} ({z:.2} SE)"
    );
    if z < 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn caught<T>(f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".to_string())),
    }
}

fn main() {
    let start = Instant::now();
    let simulation = caught(|| run_experiment(&simulation_config()).map_err(|e| e.to_string()));
    let sim_secs = start.elapsed().as_secs_f64();
    let from_report = |f: fn(&ExperimentReport) -> Verdict| -> Verdict {
        match &simulation {
            Ok(r) => caught(|| f(r)).map(|d| format!("{d} (shared simulation {sim_secs:.1} s)")),
            Err(e) => Err(format!("simulation failed: {e}")),
        }
    };
    let results: Vec<(&str, Verdict)> = vec![
        ("A1", caught(a1)),
        ("A2", caught(a2)),
        ("A3", from_report(a3)),
        ("A4", from_report(a4)),
        ("A5", caught(a5)),
        ("A6", caught(a6)),
        ("A7", caught(a7)),
        ("A8", caught(a8)),
        ("A9", caught(a9)),
    ];
    let mut failed = 0;
    for (name, v) in &results {
        match v {
            Ok(d) => println!("{name} PASS: {d}"),
            Err(d) => {
                failed += 1;
                println!("{name} FAIL: {d}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
