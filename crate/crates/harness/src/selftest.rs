//! Fast property checks runnable from the command line.

use lmoamp_core::gaussian_stat::{damping_covariance, geometric_damping};
use lmoamp_core::lmoamp::SolverConfig;
use lmoamp_core::prior::BgPrior;
use lmoamp_core::problem::SpectralProfile;
use lmoamp_core::state_evolution::{
    bayes_fixed_point, eta_geometric, se_bayes, se_general, SpectrumModel,
};
use nalgebra::{DMatrix, DVector};

use crate::experiment::splitmix64;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check {
            name,
            passed,
            detail,
        }
    }
}

/// Uniform draws in `[0, 1)` from a SplitMix64 counter.
struct Uniform(u64);

impl Uniform {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(1);
        (splitmix64(self.0) >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn damping_identity() -> Check {
    let mut u = Uniform(7);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let size = 2 + k % 7;
        let g = DMatrix::from_fn(size, size, |_, _| u.next() - 0.5);
        let c = &g * g.transpose() + DMatrix::identity(size, size) * 0.1;
        let theta = geometric_damping(0.1 + 0.9 * u.next(), size).unwrap();
        let v = damping_covariance(&c, &theta).unwrap();
        let ones = DVector::from_element(size, 1.0);
        let qc = ones.dot(&(c.try_inverse().unwrap() * &ones));
        let qv = ones.dot(&(v.try_inverse().unwrap() * &ones));
        worst = worst.max(((qv - qc) / qc).abs());
    }
    Check::new(
        "damping identity",
        worst < 1e-8,
        format!("max rel gap {worst:.2e}"),
    )
}

fn eta_closed_form() -> Check {
    let mut worst: f64 = 0.0;
    for kappa in [10.0, 1e3] {
        let p = SpectralProfile::geometric(1 << 12, 1 << 13, kappa).unwrap();
        for x in [0.1, 1.0, 10.0] {
            worst = worst.max((eta_geometric(x, 0.5, kappa).unwrap() - p.eta(x)).abs());
        }
    }
    Check::new(
        "eta transform",
        worst < 1e-3,
        format!("max abs gap {worst:.2e}"),
    )
}

fn denoiser_derivative() -> Check {
    let mut u = Uniform(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rho = 0.05 + 0.95 * u.next();
        let v = 0.01 + 2.0 * u.next();
        let s = 10.0 * u.next() - 5.0;
        let post = BgPrior::new(rho).unwrap().posterior(v).unwrap();
        let h = 1e-5;
        let fd = (post.mean(s + h) - post.mean(s - h)) / (2.0 * h);
        worst = worst.max((post.derivative(s) - fd).abs());
    }
    Check::new(
        "denoiser derivative",
        worst < 1e-6,
        format!("max abs gap {worst:.2e}"),
    )
}

fn se_equivalence() -> Check {
    let mut worst: f64 = 0.0;
    for (delta, kappa, rho, snr) in [(0.5, 10.0, 0.1, 20.0), (1.0, 1e3, 1.0, 40.0)] {
        let spec = SpectrumModel::geometric(delta, kappa).unwrap();
        let s2 = 10f64.powf(-snr / 10.0);
        let prior = BgPrior::new(rho).unwrap();
        let cfg = SolverConfig {
            t_max: 15,
            ..SolverConfig::default()
        };
        let g = se_general(&cfg, &spec, s2, &prior).unwrap();
        let b = se_bayes(15, &spec, s2, &prior).unwrap();
        for (x, y) in g.mse.iter().zip(&b.mse) {
            worst = worst.max(((x - y) / y).abs());
        }
    }
    Check::new(
        "state evolution equivalence",
        worst < 1e-8,
        format!("max rel gap {worst:.2e}"),
    )
}

fn fixed_point_convergence() -> Check {
    let spec = SpectrumModel::geometric(0.5, 1e3).unwrap();
    let prior = BgPrior::new(0.1).unwrap();
    match bayes_fixed_point(&spec, 1e-4, &prior, 1e-12, 10_000) {
        Ok(fp) => Check::new(
            "fixed point",
            fp.converged,
            format!(
                "{} iterations, mse {:.3} dB",
                fp.iterations,
                10.0 * fp.mse.log10()
            ),
        ),
        Err(e) => Check::new("fixed point", false, e.to_string()),
    }
}

/// Runs all checks in order.
pub fn run_all() -> Vec<Check> {
    vec![
        damping_identity(),
        eta_closed_form(),
        denoiser_derivative(),
        se_equivalence(),
        fixed_point_convergence(),
    ]
}
