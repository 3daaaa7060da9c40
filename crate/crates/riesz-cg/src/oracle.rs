//! Per-sample scalar reference computations.
//!
//! Everything here works on plain `f64` vectors extracted sample by sample:
//! a dense direct solve with partial pivoting, and a scalar conjugate
//! gradient iteration written independently of the function-valued solver.
//! The two solvers share no arithmetic code, so their agreement is evidence
//! rather than tautology.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::linalg::FunctionVector;
use crate::problem::Problem;
use crate::solver::{CgConfig, CgOutcome};

/// One scalar CG iteration at one sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarCgIteration {
    pub k: usize,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    /// Next direction; absent on the step where this sample converged.
    pub p: Option<Vec<f64>>,
    /// Control term; absent once the sample has converged.
    pub alpha: Option<f64>,
    pub residual_sq: f64,
}

/// The scalar CG history at one positive-weight sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleTrace {
    pub sample: usize,
    pub iterations: Vec<ScalarCgIteration>,
}

/// Direct solutions assembled into a function vector, plus the scalar CG
/// histories for every positive-weight sample.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub solutions: FunctionVector,
    pub traces: Vec<SampleTrace>,
}

/// Gaussian elimination with partial pivoting, in place. Returns the
/// solution or `None` when a pivot degenerates.
fn solve_dense(n: usize, a: &mut [f64], b: &mut [f64]) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col].abs() <= 1e-14 * scale {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            a[row * n + col] = 0.0;
            for j in col + 1..n {
                a[row * n + j] -= f * a[col * n + j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in row + 1..n {
            acc -= a[row * n + j] * x[j];
        }
        x[row] = acc / a[row * n + row];
    }
    Some(x)
}

/// Scalar conjugate gradient with the explicit-residual recurrences:
/// `x_k = x_{k-1} + alpha p_{k-1}`, `r_k = b - A x_k`,
/// `p_k = r_k - (r_k . A p_{k-1} / p_{k-1} . A p_{k-1}) p_{k-1}`,
/// `alpha_k = r_k . p_k / p_k . A p_k`.
fn scalar_cg(
    n: usize,
    a: &[f64],
    b: &[f64],
    x0: &[f64],
    residual_tol: f64,
    max_iter: usize,
) -> Vec<ScalarCgIteration> {
    let matvec = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum())
            .collect()
    };
    let dot = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(v).map(|(x, y)| x * y).sum() };
    let threshold = residual_tol * residual_tol;

    // Divisions are written as reciprocal-multiply: that is how quotients
    // are formed in the function algebra (pointwise reciprocal, then
    // product), and keeping the convention here lets the comparison measure
    // semantic divergence instead of last-ulp division noise.
    let ax0 = matvec(x0);
    let r0: Vec<f64> = b.iter().zip(&ax0).map(|(bi, ai)| bi - ai).collect();
    let p0 = r0.clone();
    let rsq0 = dot(&r0, &r0);

    let mut iterations = Vec::new();
    let alpha0 = if rsq0 < threshold {
        None
    } else {
        let ap = matvec(&p0);
        let denom = dot(&p0, &ap);
        if denom <= 0.0 || !denom.is_finite() {
            None
        } else {
            Some(dot(&r0, &p0) * (1.0 / denom))
        }
    };
    iterations.push(ScalarCgIteration {
        k: 0,
        x: x0.to_vec(),
        r: r0,
        p: Some(p0),
        alpha: alpha0,
        residual_sq: rsq0,
    });

    loop {
        let prev = iterations.last().expect("nonempty");
        if prev.residual_sq < threshold || prev.k >= max_iter {
            break;
        }
        let Some(alpha) = prev.alpha else { break };
        let p_prev = prev.p.as_ref().expect("active step carries a direction");

        let x: Vec<f64> = prev
            .x
            .iter()
            .zip(p_prev)
            .map(|(xi, pi)| xi + alpha * pi)
            .collect();
        let ax = matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let rsq = dot(&r, &r);
        let k = prev.k + 1;

        // stop at the residual check: no direction on the converged step
        if rsq < threshold {
            iterations.push(ScalarCgIteration {
                k,
                x,
                r,
                p: None,
                alpha: None,
                residual_sq: rsq,
            });
            break;
        }

        let ap_prev = matvec(p_prev);
        let denom_prev = dot(p_prev, &ap_prev);
        if denom_prev == 0.0 || !denom_prev.is_finite() {
            break;
        }
        let beta = dot(&r, &ap_prev) * (1.0 / denom_prev);
        let p: Vec<f64> = r
            .iter()
            .zip(p_prev)
            .map(|(ri, pi)| ri - beta * pi)
            .collect();

        let ap = matvec(&p);
        let denom = dot(&p, &ap);
        let alpha_next = if denom <= 0.0 || !denom.is_finite() {
            None
        } else {
            Some(dot(&r, &p) * (1.0 / denom))
        };

        iterations.push(ScalarCgIteration {
            k,
            x,
            r,
            p: Some(p),
            alpha: alpha_next,
            residual_sq: rsq,
        });
    }
    iterations
}

/// Solves every positive-weight sample directly and runs the scalar CG
/// reference there. Null samples get zero solution values.
pub fn pointwise_oracle(problem: &Problem, cfg: &CgConfig) -> Result<OracleResult> {
    pointwise_oracle_mode(problem, cfg, ExecMode::Auto)
}

pub(crate) fn pointwise_oracle_mode(
    problem: &Problem,
    cfg: &CgConfig,
    mode: ExecMode,
) -> Result<OracleResult> {
    let n = problem.n();
    let m = problem.samples();
    let space = &problem.space;
    let max_iter = cfg.max_iter.unwrap_or(n).max(1);
    let zero_start = vec![0.0; n];

    let per_sample = exec::batch_try(mode, m, exec::ORACLE_PAR_MIN, |s| {
        if space.weights()[s] == 0.0 {
            return Ok(None);
        }
        let mut a = problem.a.sample_matrix(s);
        let mut b = problem.b.sample_values(s);
        let solution = solve_dense(n, &mut a, &mut b).ok_or(Error::SingularSample { sample: s })?;
        let x0 = match &problem.x0 {
            Some(v) => v.sample_values(s),
            None => zero_start.clone(),
        };
        let trace = scalar_cg(
            n,
            &problem.a.sample_matrix(s),
            &problem.b.sample_values(s),
            &x0,
            cfg.residual_tol,
            max_iter,
        );
        Ok(Some((solution, trace)))
    })?;

    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let values: Vec<f64> = (0..m)
            .map(|s| match &per_sample[s] {
                Some((solution, _)) => solution[i],
                None => 0.0,
            })
            .collect();
        entries.push(crate::algebra::AlgebraElement::from_values(space, values)?);
    }
    let solutions = FunctionVector::new(entries)?;

    let traces = per_sample
        .into_iter()
        .enumerate()
        .filter_map(|(s, slot)| {
            slot.map(|(_, iterations)| SampleTrace {
                sample: s,
                iterations,
            })
        })
        .collect();

    Ok(OracleResult { solutions, traces })
}

/// Outcome of checking the function-valued trace against the scalar one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    /// Worst relative deviation across samples, iterations, and quantities.
    pub max_rel_dev: f64,
    pub pass: bool,
    pub tol: f64,
    pub iterations_compared: usize,
    pub samples_compared: usize,
}

fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0_f64.max(a.abs()).max(b.abs())
}

/// Compares every iterate of the function-valued run against the scalar
/// reference at every positive-weight sample, over the iterations both
/// sides produced.
pub fn compare(outcome: &CgOutcome, oracle: &OracleResult, tol: f64) -> Result<CompareReport> {
    let n = outcome.final_x.len();
    if oracle.solutions.len() != n {
        return Err(Error::ShapeMismatch {
            detail: format!(
                "system dimension {} in trace vs {} in oracle",
                n,
                oracle.solutions.len()
            ),
        });
    }
    if outcome.final_x.space().weights() != oracle.solutions.space().weights() {
        return Err(Error::ShapeMismatch {
            detail: "traces are defined on different measure spaces".into(),
        });
    }

    let mut max_rel = 0.0_f64;
    let mut iterations = 0usize;
    for trace in &oracle.traces {
        let s = trace.sample;
        let common = outcome.records.len().min(trace.iterations.len());
        for k in 0..common {
            let record = &outcome.records[k];
            let scalar = &trace.iterations[k];
            for i in 0..n {
                max_rel = max_rel.max(rel_dev(record.x.entry(i).value_at(s), scalar.x[i]));
                max_rel = max_rel.max(rel_dev(record.r.entry(i).value_at(s), scalar.r[i]));
            }
            if let (Some(p), Some(scalar_p)) = (&record.p, &scalar.p) {
                for i in 0..n {
                    max_rel = max_rel.max(rel_dev(p.entry(i).value_at(s), scalar_p[i]));
                }
            }
            if let (Some(alpha), Some(scalar_alpha)) = (&record.alpha, scalar.alpha) {
                max_rel = max_rel.max(rel_dev(alpha.value_at(s), scalar_alpha));
            }
            iterations += 1;
        }
    }

    Ok(CompareReport {
        max_rel_dev: max_rel,
        pass: max_rel <= tol,
        tol,
        iterations_compared: iterations,
        samples_compared: oracle.traces.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{AlgebraElement, MeasureSpace};
    use crate::linalg::FunctionMatrix;
    use crate::problem::{generate_mirrored, generate_problem, Problem, ProblemMetadata};
    use crate::solver::{cg_solve, CgVerdict};

    fn diagonal_problem() -> Problem {
        let space = MeasureSpace::uniform(3).unwrap();
        let mut rows = vec![vec![AlgebraElement::zero(&space); 2]; 2];
        rows[0][0] = AlgebraElement::from_values(&space, vec![2.0, 3.0, 4.0]).unwrap();
        rows[1][1] = AlgebraElement::from_values(&space, vec![1.0, 0.5, 5.0]).unwrap();
        let a = FunctionMatrix::from_rows(rows).unwrap();
        let b = FunctionVector::new(vec![
            AlgebraElement::from_values(&space, vec![2.0, 6.0, 8.0]).unwrap(),
            AlgebraElement::from_values(&space, vec![3.0, 1.0, 10.0]).unwrap(),
        ])
        .unwrap();
        Problem {
            space,
            a,
            b,
            x0: None,
            metadata: ProblemMetadata {
                generator: "test".into(),
                seed: 0,
                kappa_target: 1.0,
                perturbation: 0.0,
            },
        }
    }

    #[test]
    fn diagonal_direct_solve_divides_entrywise() {
        let p = diagonal_problem();
        let oracle = pointwise_oracle(&p, &CgConfig::default()).unwrap();
        for &s in p.space.positive_indices() {
            for i in 0..2 {
                let expect = p.b.entry(i).value_at(s) / p.a.get(i, i).value_at(s);
                assert!((oracle.solutions.entry(i).value_at(s) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_system_solves_to_known_solution_at_every_sample() {
        let space = MeasureSpace::uniform(4).unwrap();
        let a =
            FunctionMatrix::from_constant_rows(&space, &[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let b = FunctionVector::from_constants(&space, &[1.0, 2.0]).unwrap();
        let p = Problem {
            space: space.clone(),
            a,
            b,
            x0: None,
            metadata: ProblemMetadata {
                generator: "test".into(),
                seed: 0,
                kappa_target: 1.0,
                perturbation: 0.0,
            },
        };
        let oracle = pointwise_oracle(&p, &CgConfig::default()).unwrap();
        for &s in space.positive_indices() {
            assert!((oracle.solutions.entry(0).value_at(s) - 1.0 / 11.0).abs() < 1e-12);
            assert!((oracle.solutions.entry(1).value_at(s) - 7.0 / 11.0).abs() < 1e-12);
        }
        // the direct solutions satisfy the system tightly
        let residual = p.a.matvec(&oracle.solutions).unwrap().sub(&p.b).unwrap();
        for entry in residual.entries() {
            assert!(entry.max_abs() < 1e-12);
        }
    }

    #[test]
    fn singular_sample_is_reported() {
        let space = MeasureSpace::uniform(2).unwrap();
        let a = FunctionMatrix::from_rows(vec![
            vec![
                AlgebraElement::from_values(&space, vec![1.0, 0.0]).unwrap(),
                AlgebraElement::zero(&space),
            ],
            vec![
                AlgebraElement::zero(&space),
                AlgebraElement::from_values(&space, vec![1.0, 0.0]).unwrap(),
            ],
        ])
        .unwrap();
        let b = FunctionVector::from_constants(&space, &[1.0, 1.0]).unwrap();
        let p = Problem {
            space,
            a,
            b,
            x0: None,
            metadata: ProblemMetadata {
                generator: "test".into(),
                seed: 0,
                kappa_target: 1.0,
                perturbation: 0.0,
            },
        };
        match pointwise_oracle(&p, &CgConfig::default()) {
            Err(Error::SingularSample { sample }) => assert_eq!(sample, 1),
            other => panic!("expected SingularSample, got {other:?}"),
        }
    }

    #[test]
    fn master_equivalence_on_a_seeded_problem() {
        let p = generate_problem(5, 12, 20.0, 0.25, 4242).unwrap();
        let cfg = CgConfig::default();
        let outcome = cg_solve(&p.a, &p.b, None, &cfg).unwrap();
        assert_eq!(outcome.verdict, CgVerdict::Successful);
        let oracle = pointwise_oracle(&p, &cfg).unwrap();
        let report = compare(&outcome, &oracle, 1e-10).unwrap();
        assert!(report.pass, "max deviation {}", report.max_rel_dev);
        assert!(report.iterations_compared > 0);
        assert_eq!(report.samples_compared, 12);
    }

    #[test]
    fn comparison_survives_infeasible_truncation() {
        let p = generate_mirrored(3, 11).unwrap();
        let cfg = CgConfig::default();
        let outcome = cg_solve(&p.a, &p.b, None, &cfg).unwrap();
        assert!(matches!(outcome.verdict, CgVerdict::Infeasible { .. }));
        let oracle = pointwise_oracle(&p, &cfg).unwrap();
        let report = compare(&outcome, &oracle, 1e-10).unwrap();
        assert!(report.pass, "max deviation {}", report.max_rel_dev);
    }

    #[test]
    fn shape_mismatch_detected() {
        let p1 = generate_problem(3, 4, 5.0, 0.1, 1).unwrap();
        let p2 = generate_problem(4, 4, 5.0, 0.1, 1).unwrap();
        let cfg = CgConfig::default();
        let outcome = cg_solve(&p1.a, &p1.b, None, &cfg).unwrap();
        let oracle = pointwise_oracle(&p2, &cfg).unwrap();
        assert!(matches!(
            compare(&outcome, &oracle, 1e-10),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn zero_weight_samples_are_skipped() {
        let space = MeasureSpace::new(vec![1.0, 0.0], None).unwrap();
        // the null sample carries a singular matrix; the oracle must not care
        let a = FunctionMatrix::from_rows(vec![vec![AlgebraElement::from_values(
            &space,
            vec![2.0, 0.0],
        )
        .unwrap()]])
        .unwrap();
        let b = FunctionVector::new(vec![
            AlgebraElement::from_values(&space, vec![4.0, 9.0]).unwrap()
        ])
        .unwrap();
        let p = Problem {
            space,
            a,
            b,
            x0: None,
            metadata: ProblemMetadata {
                generator: "test".into(),
                seed: 0,
                kappa_target: 1.0,
                perturbation: 0.0,
            },
        };
        let oracle = pointwise_oracle(&p, &CgConfig::default()).unwrap();
        assert_eq!(oracle.traces.len(), 1);
        assert_eq!(oracle.traces[0].sample, 0);
        assert_eq!(oracle.solutions.entry(0).value_at(0), 2.0);
        assert_eq!(oracle.solutions.entry(0).value_at(1), 0.0);
        let report = compare(
            &cg_solve(&p.a, &p.b, None, &CgConfig::default()).unwrap(),
            &oracle,
            1e-10,
        )
        .unwrap();
        assert!(report.pass);
    }

    #[test]
    fn oracle_and_solver_iterates_match_with_tight_margin() {
        // spot check the actual magnitude of the deviation, not just the gate
        let p = generate_problem(6, 8, 50.0, 0.2, 777).unwrap();
        let cfg = CgConfig::default();
        let outcome = cg_solve(&p.a, &p.b, None, &cfg).unwrap();
        let oracle = pointwise_oracle(&p, &cfg).unwrap();
        let report = compare(&outcome, &oracle, 1e-10).unwrap();
        assert!(
            report.max_rel_dev < 1e-13,
            "deviation {}",
            report.max_rel_dev
        );
    }
}
