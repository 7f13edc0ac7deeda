//! Command-line interface.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use lmoamp_core::prior::BgPrior;
use lmoamp_core::state_evolution::{
    bayes_fixed_point, se_bayes, SpectrumModel, FIXED_POINT_MAX_ITER, FIXED_POINT_TOL,
};

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::experiment::run_experiment;
use crate::selftest;

/// Exit code for malformed configuration or usage.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for runtime failures.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "lmoamp",
    about = "Long-memory OAMP experiments and state evolution"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Scalar model parameters shared by `se` and `fp`.
#[derive(Debug, Clone, clap::Args)]
pub struct ModelArgs {
    /// Compression ratio M/N.
    #[arg(long)]
    pub delta: f64,
    /// Condition number of A.
    #[arg(long)]
    pub kappa: f64,
    /// Signal density.
    #[arg(long)]
    pub rho: f64,
    /// Signal-to-noise ratio in dB.
    #[arg(long)]
    pub snr: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte Carlo experiment described by a TOML file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the Bayes-optimal state-evolution trajectory as CSV.
    Se {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 30)]
        iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the fixed point of the Bayes-optimal state evolution.
    Fp {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = FIXED_POINT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = FIXED_POINT_MAX_ITER)]
        max_iter: usize,
    },
    /// Run the built-in property checks.
    Selftest,
}

fn model(args: &ModelArgs) -> Result<(SpectrumModel, f64, BgPrior), HarnessError> {
    let spectrum = SpectrumModel::geometric(args.delta, args.kappa)?;
    let prior = BgPrior::new(args.rho)?;
    Ok((spectrum, 10f64.powf(-args.snr / 10.0), prior))
}

/// CSV of [`se_bayes`]: one row per iteration.
pub fn se_csv(args: &ModelArgs, iters: usize) -> Result<String, HarnessError> {
    let (spectrum, sigma2, prior) = model(args)?;
    let tr = se_bayes(iters, &spectrum, sigma2, &prior)?;
    let mut out = String::from("iteration,v_ba,v_ab,xi_a,xi_b,mse_db\n");
    for t in 0..tr.len() {
        out.push_str(&format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.6}\n",
            t + 1,
            tr.v_ba[t],
            tr.v_ab[t],
            tr.xi_a[t],
            tr.xi_b[t],
            10.0 * tr.mse[t].log10()
        ));
    }
    Ok(out)
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), HarnessError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| HarnessError::Io {
            path: p.clone(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| HarnessError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn run_command(cmd: Command) -> Result<i32, HarnessError> {
    match cmd {
        Command::Run {
            config,
            seed,
            trials,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                if t == 0 {
                    return Err(HarnessError::Config("`--trials` must be at least 1".into()));
                }
                cfg.trials = t;
            }
            if out.is_some() {
                cfg.output = out;
            }
            let report = run_experiment(&cfg)?;
            if cfg.output.is_none() {
                write_out(None, &report.to_csv())?;
            }
            for s in &report.summaries {
                eprintln!(
                    "{}: {} trials, {} excluded, max gap {:.3} dB",
                    s.variant,
                    s.included,
                    s.excluded,
                    report.max_gap(&s.variant, cfg.t_max)
                );
                if let Some(e) = &s.first_error {
                    eprintln!("  first error: {e}");
                }
            }
            Ok(0)
        }
        Command::Se { model, iters, out } => {
            write_out(out.as_ref(), &se_csv(&model, iters)?)?;
            Ok(0)
        }
        Command::Fp {
            model: args,
            tol,
            max_iter,
        } => {
            let (spectrum, sigma2, prior) = model(&args)?;
            let fp = bayes_fixed_point(&spectrum, sigma2, &prior, tol, max_iter)?;
            println!("v_ab = {:.12e}", fp.v_ab);
            println!("v_ba = {:.12e}", fp.v_ba);
            println!("mse = {:.12e}", fp.mse);
            println!("mse_db = {:.6}", 10.0 * fp.mse.log10());
            println!("iterations = {}", fp.iterations);
            println!("converged = {}", fp.converged);
            Ok(if fp.converged { 0 } else { EXIT_FAILURE })
        }
        Command::Selftest => {
            let checks = selftest::run_all();
            let mut ok = true;
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                ok &= c.passed;
            }
            Ok(if ok { 0 } else { EXIT_FAILURE })
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e @ HarnessError::Config(_)) => {
            eprintln!("error: {e}");
            eprintln!("usage: lmoamp run <config.toml> [--seed N] [--trials N] [--out PATH]");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}
