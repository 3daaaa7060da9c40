//! Command-line harness: generate problems, solve them, run the per-sample
//! oracle, and verify orthogonality and convergence-rate claims.
//!
//! Exit codes: 0 success, 1 usage error, 2 infeasible solver verdict,
//! 3 verification failure, 4 i/o or validation error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use riesz_cg::{
    cg_solve, compare, generate, io, pointwise_oracle, verify_orthogonality, verify_rate, CgConfig,
    CgVerdict, Error, FunctionVector, GeneratorMode, ToleranceConfig,
};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 3;
const EXIT_DATA: u8 = 4;

#[derive(Parser)]
#[command(
    name = "riesz-cg",
    about = "Conjugate gradient solving and verification for function-valued linear systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Random,
    Mirrored,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded problem file.
    Generate {
        /// System dimension.
        #[arg(long)]
        n: usize,
        /// Number of sample points.
        #[arg(long)]
        samples: usize,
        /// Target global condition number.
        #[arg(long, default_value_t = 10.0)]
        kappa: f64,
        /// Relative size of the per-sample perturbation, in [0, 1).
        #[arg(long, default_value_t = 0.1)]
        perturbation: f64,
        /// RNG seed; the output is a pure function of the arguments.
        #[arg(long)]
        seed: u64,
        /// `random` builds a conditioned SPD family; `mirrored` builds the
        /// two-sample infeasibility showcase.
        #[arg(long, value_enum, default_value_t = Mode::Random)]
        mode: Mode,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve a problem and write the full iteration trace.
    Solve {
        problem: PathBuf,
        /// Residual tolerance: stop when sup r^T r < tol^2.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Optional starting point: JSON array of n arrays of m values.
        #[arg(long)]
        x0: Option<PathBuf>,
        /// Skip symmetry/definiteness validation on load.
        #[arg(long)]
        skip_validate: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve every sample directly and record the scalar CG reference runs.
    Oracle {
        problem: PathBuf,
        #[arg(long)]
        skip_validate: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compare a solver trace against an oracle file.
    Compare {
        trace: PathBuf,
        oracle: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Check the convergence-rate envelope for a trace.
    Bound {
        problem: PathBuf,
        trace: PathBuf,
        #[arg(long)]
        skip_validate: bool,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write a plottable CSV of (k, lhs_sup, rhs, margin).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check the pairwise orthogonality relations for a trace.
    Verify {
        trace: PathBuf,
        problem: PathBuf,
        #[arg(long)]
        skip_validate: bool,
    },
}

fn data_exit(err: &Error) -> u8 {
    match err {
        Error::BadParameters { .. } => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn load_x0(path: &Path, n: usize, problem: &riesz_cg::Problem) -> Result<FunctionVector, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let data: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    if data.len() != n {
        return Err(Error::Validation {
            field: "x0".into(),
            detail: format!("expected {} entries, found {}", n, data.len()),
        });
    }
    let entries = data
        .into_iter()
        .map(|values| riesz_cg::AlgebraElement::from_values(&problem.space, values))
        .collect::<Result<Vec<_>, _>>()?;
    FunctionVector::new(entries)
}

fn run(cli: Cli) -> u8 {
    match cli.command {
        Command::Generate {
            n,
            samples,
            kappa,
            perturbation,
            seed,
            mode,
            output,
        } => {
            let mode = match mode {
                Mode::Random => GeneratorMode::Random,
                Mode::Mirrored => GeneratorMode::Mirrored,
            };
            let problem = match generate(mode, n, samples, kappa, perturbation, seed) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            if let Err(e) = io::save_problem(&output, &problem) {
                eprintln!("error: {e}");
                return data_exit(&e);
            }
            println!(
                "wrote {} ({}x{} system on {} samples, generator {})",
                output.display(),
                problem.n(),
                problem.n(),
                problem.samples(),
                problem.metadata.generator
            );
            EXIT_OK
        }

        Command::Solve {
            problem,
            tol,
            max_iter,
            x0,
            skip_validate,
            output,
        } => {
            let p = match io::load_problem(&problem, skip_validate) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            let mut cfg = CgConfig::default();
            if let Some(t) = tol {
                cfg.residual_tol = t;
            }
            cfg.max_iter = max_iter;

            let start = match &x0 {
                Some(path) => match load_x0(path, p.n(), &p) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return data_exit(&e);
                    }
                },
                None => p.x0.clone(),
            };

            let outcome = match cg_solve(&p.a, &p.b, start.as_ref(), &cfg) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            if let Err(e) = io::save_trace(&output, &outcome) {
                eprintln!("error: {e}");
                return data_exit(&e);
            }
            let last = outcome.last();
            println!(
                "verdict: {:?} after {} steps, sup r^T r = {:.3e}; trace in {}",
                outcome.verdict,
                last.k,
                last.residual_sup,
                output.display()
            );
            match outcome.verdict {
                CgVerdict::Infeasible { step } => {
                    println!(
                        "control term left the one-signed set at step {step}; witnesses: {:?}",
                        outcome.records[step].alpha_witnesses
                    );
                    EXIT_INFEASIBLE
                }
                _ => EXIT_OK,
            }
        }

        Command::Oracle {
            problem,
            skip_validate,
            output,
        } => {
            let p = match io::load_problem(&problem, skip_validate) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            let oracle = match pointwise_oracle(&p, &CgConfig::default()) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            if let Err(e) = io::save_oracle(&output, &oracle) {
                eprintln!("error: {e}");
                return data_exit(&e);
            }
            println!(
                "solved {} samples directly; wrote {}",
                oracle.traces.len(),
                output.display()
            );
            EXIT_OK
        }

        Command::Compare { trace, oracle, tol } => {
            let outcome = match io::load_trace(&trace) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            let oracle = match io::load_oracle(&oracle) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            let report = match compare(&outcome, &oracle, tol) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            println!(
                "max relative deviation {:.3e} over {} iterations x {} samples (tol {:.1e}): {}",
                report.max_rel_dev,
                report.iterations_compared,
                report.samples_compared,
                report.tol,
                if report.pass { "PASS" } else { "FAIL" }
            );
            if report.pass {
                EXIT_OK
            } else {
                EXIT_VERIFY_FAILED
            }
        }

        Command::Bound {
            problem,
            trace,
            skip_validate,
            output,
            csv,
        } => {
            let p = match io::load_problem(&problem, skip_validate) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            let outcome = match io::load_trace(&trace) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            // the reference solution comes from per-sample direct solves
            let oracle = match pointwise_oracle(&p, &CgConfig::default()) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            let report = match verify_rate(
                &outcome,
                &p.a,
                &oracle.solutions,
                &ToleranceConfig::absolute(1e-9),
            ) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            if let Err(e) = io::save_bound_report(&output, &report) {
                eprintln!("error: {e}");
                return data_exit(&e);
            }
            if let Some(csv_path) = csv {
                if let Err(e) = io::save_bound_csv(&csv_path, &report) {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            }
            let holds = report.all_hold();
            println!(
                "kappa = {:.6} (lambda in [{:.6}, {:.6}]); {} steps checked: {}",
                report.kappa,
                report.lambda_under,
                report.lambda_over,
                report.per_k.len(),
                if holds { "PASS" } else { "FAIL" }
            );
            println!(
                "per-sample kappa in [{:.6}, {:.6}]",
                report.kappa_pointwise_min, report.kappa_pointwise_max
            );
            for row in &report.per_k {
                println!(
                    "  k={:2}  error_sup={:.6e}  envelope={:.6e}  margin={:+.3e}  {}",
                    row.k,
                    row.lhs_sup,
                    row.rhs,
                    row.margin,
                    if row.holds { "ok" } else { "VIOLATED" }
                );
            }
            if holds {
                EXIT_OK
            } else {
                EXIT_VERIFY_FAILED
            }
        }

        Command::Verify {
            trace,
            problem,
            skip_validate,
        } => {
            let outcome = match io::load_trace(&trace) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            let p = match io::load_problem(&problem, skip_validate) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            let report = match verify_orthogonality(&outcome, &p.a, &ToleranceConfig::default()) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return data_exit(&e);
                }
            };
            let scale = p.b.sup_euclidean() * p.a.sup_frobenius();
            let threshold = 1e-8 * scale;
            let pass = report.max_p_dot_r <= threshold
                && report.max_r_dot_r <= threshold
                && report.max_p_a_p <= threshold;
            println!(
                "orthogonality maxima over {} pairs (threshold {:.3e}):",
                report.pairs_checked, threshold
            );
            println!("  max |p_i^T r_j|   = {:.6e}", report.max_p_dot_r);
            println!("  max |r_i^T r_j|   = {:.6e}", report.max_r_dot_r);
            println!("  max |<p_i,p_j>_A| = {:.6e}", report.max_p_a_p);
            println!(
                "  max Krylov projection residual = {:.6e}",
                report.max_krylov_residual
            );
            println!("{}", if pass { "PASS" } else { "FAIL" });
            if pass {
                EXIT_OK
            } else {
                EXIT_VERIFY_FAILED
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run(cli))
}
