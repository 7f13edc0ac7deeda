//! Dense-matrix transcription of full-memory LM-OAMP, compared with the
//! matrix-free solver message by message.
//!
//! The oracle forms `A` explicitly, builds every filter as
//! `W = v (σ² I + v A Aᵀ)⁻¹ A`, evaluates all traces densely and computes
//! the Bernoulli-Gaussian posterior of a vector observation `s = x 1 + z`
//! by whitening with the full noise covariance.

use lmoamp_core::lmoamp::{run, GuardScope, MemoryPolicy, SolverConfig, SolverState};
use lmoamp_core::prior::BgPrior;
use lmoamp_core::problem::{sample_problem, ProblemConfig, ProblemInstance};
use nalgebra::{DMatrix, DVector};

const ITERATIONS: usize = 3;

/// `(E[x | s], E[x² | s])` for `s = x 1 + z`, `z ~ N(0, Σ)` and a BG prior.
fn posterior_moments(rho: f64, sigma: &DMatrix<f64>, s: &DVector<f64>) -> (f64, f64) {
    let va = 1.0 / rho;
    let inv = sigma
        .clone()
        .try_inverse()
        .expect("invertible noise covariance");
    let ones = DVector::from_element(s.len(), 1.0);
    let inv_ones = &inv * &ones;
    let q = ones.dot(&inv_ones);
    let b = inv_ones.dot(s);
    let log_ratio = -0.5 * (1.0 + va * q).ln() + 0.5 * va * b * b / (1.0 + va * q);
    let pi = if rho >= 1.0 {
        1.0
    } else {
        1.0 / (1.0 + (-(rho / (1.0 - rho)).ln() - log_ratio).exp())
    };
    let precision = 1.0 / va + q;
    let mu = b / precision;
    (pi * mu, pi * (1.0 / precision + mu * mu))
}

fn scalar_moments(rho: f64, v: f64, s: f64) -> (f64, f64) {
    posterior_moments(
        rho,
        &DMatrix::from_element(1, 1, v),
        &DVector::from_element(1, s),
    )
}

struct Combined {
    mean: DVector<f64>,
    weights: DVector<f64>,
    variance: f64,
}

fn combine(messages: &[DVector<f64>], v: &DMatrix<f64>) -> Combined {
    let inv = v
        .clone()
        .try_inverse()
        .expect("invertible message covariance");
    let a = &inv * DVector::from_element(v.nrows(), 1.0);
    let total = a.sum();
    let weights = a / total;
    let mut mean = DVector::zeros(messages[0].len());
    for (m, w) in messages.iter().zip(weights.iter()) {
        mean += m * *w;
    }
    Combined {
        mean,
        weights,
        variance: 1.0 / total,
    }
}

fn cross(w_prev: &DVector<f64>, v: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    let block = v.view((0, 0), (w_prev.len(), w.len()));
    (w_prev.transpose() * block * w)[(0, 0)]
}

#[derive(Default)]
struct Dense {
    x_ab: Vec<DVector<f64>>,
    x_ba: Vec<DVector<f64>>,
    x_post_a: Vec<DVector<f64>>,
    x_post_b: Vec<DVector<f64>>,
    v_ab: DMatrix<f64>,
    v_ba: DMatrix<f64>,
    post_a: DMatrix<f64>,
    post_b: DMatrix<f64>,
    xi_a: Vec<f64>,
    xi_b: Vec<f64>,
}

fn grow(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().resize(m.nrows() + 1, m.ncols() + 1, 0.0)
}

fn dense_run(p: &ProblemInstance, rho: f64) -> Dense {
    let n = p.n();
    let m = p.operator.m();
    let nf = n as f64;
    let s2 = p.sigma2;
    let a = DMatrix::from_fn(m, n, |_, _| 0.0);
    let mut a = a;
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = p.operator.apply(&e).unwrap();
        for i in 0..m {
            a[(i, j)] = col[i];
        }
    }
    let y = DVector::from_column_slice(&p.y);
    let eye_n = DMatrix::<f64>::identity(n, n);

    let mut d = Dense {
        x_ba: vec![DVector::zeros(n)],
        v_ba: DMatrix::from_element(1, 1, 1.0),
        v_ab: DMatrix::zeros(0, 0),
        post_a: DMatrix::zeros(0, 0),
        post_b: DMatrix::zeros(0, 0),
        ..Dense::default()
    };
    let mut filters: Vec<DMatrix<f64>> = Vec::new();
    let mut w_a: Vec<DVector<f64>> = Vec::new();
    let mut w_b: Vec<DVector<f64>> = Vec::new();
    let mut suf_a = DMatrix::<f64>::zeros(0, 0);
    let mut suf_b = DMatrix::<f64>::zeros(0, 0);
    let mut s_b: Vec<DVector<f64>> = Vec::new();
    let mut ext_a_cov = DMatrix::<f64>::zeros(0, 0);
    // Extrinsic B ledger including the initial zero message at index 0.
    let mut ext_b_cov = DMatrix::from_element(1, 1, 1.0);

    for t in 0..ITERATIONS {
        // Module A.
        let c = combine(&d.x_ba, &d.v_ba);
        suf_a = grow(&suf_a);
        for tp in 0..t {
            let val = cross(&w_a[tp], &d.v_ba, &c.weights);
            suf_a[(tp, t)] = val;
            suf_a[(t, tp)] = val;
        }
        suf_a[(t, t)] = c.variance;
        w_a.push(c.weights.clone());
        let v = c.variance;
        let aat = &a * a.transpose();
        let gram = DMatrix::<f64>::identity(m, m) * s2 + aat * v;
        let w = gram.try_inverse().unwrap() * &a * v;
        let xi = 1.0 - (w.transpose() * &a).trace() / nf;
        let x_post = &c.mean + w.transpose() * (&y - &a * &c.mean);
        filters.push(w);
        d.xi_a.push(xi);
        d.post_a = grow(&d.post_a);
        ext_a_cov = grow(&ext_a_cov);
        for tp in 0..=t {
            let (wp, wt) = (&filters[tp], &filters[t]);
            let lp = &eye_n - wp.transpose() * &a;
            let lt = &eye_n - wt.transpose() * &a;
            let gamma = (lp.transpose() * lt).trace() / nf;
            let post = gamma * suf_a[(tp, t)] + s2 * (wp.transpose() * wt).trace() / nf;
            d.post_a[(tp, t)] = post;
            d.post_a[(t, tp)] = post;
            let xp = d.xi_a[tp];
            let e = (post - xp * xi * suf_a[(tp, t)]) / ((1.0 - xp) * (1.0 - xi));
            ext_a_cov[(tp, t)] = e;
            ext_a_cov[(t, tp)] = e;
        }
        d.x_ab.push((&x_post - &c.mean * xi) / (1.0 - xi));
        d.x_post_a.push(x_post);
        d.v_ab = ext_a_cov.clone();

        // Module B.
        let c = combine(&d.x_ab, &d.v_ab);
        suf_b = grow(&suf_b);
        for tp in 0..t {
            let val = cross(&w_b[tp], &d.v_ab, &c.weights);
            suf_b[(tp, t)] = val;
            suf_b[(t, tp)] = val;
        }
        suf_b[(t, t)] = c.variance;
        w_b.push(c.weights.clone());
        let v = c.variance;
        let mut f = DVector::zeros(n);
        let mut var_avg = 0.0;
        for i in 0..n {
            let (m1, m2) = scalar_moments(rho, v, c.mean[i]);
            f[i] = m1;
            var_avg += (m2 - m1 * m1) / nf;
        }
        let xi = var_avg / v;
        d.xi_b.push(xi);
        s_b.push(c.mean.clone());
        d.post_b = grow(&d.post_b);
        ext_b_cov = grow(&ext_b_cov);
        ext_b_cov[(0, t + 1)] = var_avg / (1.0 - xi);
        ext_b_cov[(t + 1, 0)] = var_avg / (1.0 - xi);
        for tp in 0..=t {
            let post = if tp == t {
                var_avg
            } else {
                let sigma = DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        suf_b[(tp, tp)],
                        suf_b[(tp, t)],
                        suf_b[(tp, t)],
                        suf_b[(t, t)],
                    ],
                );
                let f_prev = &d.x_post_b[tp];
                (0..n)
                    .map(|i| {
                        let obs = DVector::from_column_slice(&[s_b[tp][i], s_b[t][i]]);
                        let (m1, m2) = posterior_moments(rho, &sigma, &obs);
                        m2 - (f_prev[i] + f[i]) * m1 + f_prev[i] * f[i]
                    })
                    .sum::<f64>()
                    / nf
            };
            d.post_b[(tp, t)] = post;
            d.post_b[(t, tp)] = post;
            let xp = d.xi_b[tp];
            let e = (post - xp * xi * suf_b[(tp, t)]) / ((1.0 - xp) * (1.0 - xi));
            ext_b_cov[(tp + 1, t + 1)] = e;
            ext_b_cov[(t + 1, tp + 1)] = e;
        }
        d.x_ba.push((&f - &c.mean * xi) / (1.0 - xi));
        d.x_post_b.push(f);
        d.v_ba = ext_b_cov.clone();
    }
    d
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * b.abs().max(1.0)
}

fn assert_vec(name: &str, a: &[f64], b: &DVector<f64>) {
    assert_eq!(a.len(), b.len());
    for (i, (x, y)) in a.iter().zip(b.iter()).enumerate() {
        assert!(close(*x, *y), "{name}[{i}]: {x} vs {y}");
    }
}

fn assert_ledger(name: &str, l: &lmoamp_core::gaussian_stat::CovarianceLedger, m: &DMatrix<f64>) {
    assert_eq!(l.len(), m.nrows(), "{name} size");
    for i in 0..l.len() {
        for j in 0..l.len() {
            assert!(
                close(l.get(i, j), m[(i, j)]),
                "{name}({i},{j}): {} vs {}",
                l.get(i, j),
                m[(i, j)]
            );
        }
    }
}

pub fn check(problem_cfg: ProblemConfig, seed: u64) {
    let p = sample_problem(&problem_cfg, seed).unwrap();
    let prior = BgPrior::new(problem_cfg.rho).unwrap();
    let cfg = SolverConfig {
        t_max: ITERATIONS,
        stop_tol: 0.0,
        guard_scope: GuardScope::Off,
        ..SolverConfig::with_policy(MemoryPolicy::full())
    };
    let st: SolverState = run(&p, &prior, &cfg).unwrap();
    let d = dense_run(&p, problem_cfg.rho);
    assert_eq!(st.iterations(), ITERATIONS);
    for t in 0..ITERATIONS {
        assert!(close(st.xi_a[t], d.xi_a[t]), "xi_a[{t}]");
        assert!(close(st.xi_b[t], d.xi_b[t]), "xi_b[{t}]");
        assert_vec("x_post_a", &st.x_post_a[t], &d.x_post_a[t]);
        assert_vec("x_ab", &st.x_ab[t], &d.x_ab[t]);
        assert_vec("x_post_b", &st.x_post_b[t], &d.x_post_b[t]);
    }
    for t in 0..=ITERATIONS {
        assert_vec("x_ba", &st.x_ba[t], &d.x_ba[t]);
    }
    assert_ledger("post_a", &st.post_a_cov, &d.post_a);
    assert_ledger("v_ab", &st.v_ab, &d.v_ab);
    assert_ledger("post_b", &st.post_b_cov, &d.post_b);
    assert_ledger("v_ba", &st.v_ba, &d.v_ba);
}

/// Instances on which every estimated ledger stays a valid covariance; at
/// N = 16 other draws can turn indefinite after a few iterations.
pub fn cases() -> Vec<(ProblemConfig, u64)> {
    let plain = ProblemConfig {
        n: 16,
        m: 8,
        rho: 0.2,
        kappa: 10.0,
        snr_db: 20.0,
        sign_randomization: false,
    };
    let signed = ProblemConfig {
        n: 16,
        m: 8,
        rho: 0.3,
        kappa: 4.0,
        snr_db: 30.0,
        sign_randomization: true,
    };
    vec![
        (plain.clone(), 0),
        (plain.clone(), 1),
        (plain, 2),
        (signed.clone(), 0),
        (signed, 2),
    ]
}
