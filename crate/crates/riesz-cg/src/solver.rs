//! Conjugate gradient iteration over the sampled-function algebra.
//!
//! All recurrences run in the algebra, so one iteration advances the whole
//! function-valued system at once. Divisions go through `invert`, which is
//! only legal for one-signed elements; the control term `alpha_k` must be
//! one-signed for the iteration to continue. When it is not, the run ends
//! with an `Infeasible` verdict carrying the witnessing samples. That
//! happens in particular when part of the space converges earlier than the
//! rest: the residual vanishes at those samples, the next search direction
//! vanishes with it, and the control term stops being one-signed even
//! though every per-sample system is individually solvable.

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, ToleranceConfig};
use crate::error::{Error, Result};
use crate::linalg::{FunctionMatrix, FunctionVector};

/// Stopping and tolerance settings for a solve.
#[derive(Debug, Clone)]
pub struct CgConfig {
    /// Convergence when `sup_X r^T r < residual_tol^2`.
    pub residual_tol: f64,
    /// Maximum step index; `None` means the system dimension `n`.
    pub max_iter: Option<usize>,
    /// Tolerance policy for feasibility and invertibility tests.
    pub tol: ToleranceConfig,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            max_iter: None,
            tol: ToleranceConfig::default(),
        }
    }
}

impl CgConfig {
    fn residual_threshold(&self) -> f64 {
        self.residual_tol * self.residual_tol
    }

    fn effective_max_iter(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(n).max(1)
    }
}

/// Everything computed at one iteration.
///
/// The stop checks run in the paper's order: residual first, then the next
/// direction, then the control term. A step that already meets the residual
/// tolerance therefore carries no direction and no control term.
#[derive(Debug, Clone)]
pub struct CgIterationRecord {
    pub k: usize,
    pub x: FunctionVector,
    pub r: FunctionVector,
    /// Next search direction; `None` on the step where the run converged.
    pub p: Option<FunctionVector>,
    /// Control term; `None` when the step converged before it was needed or
    /// when its denominator vanished on positive measure.
    pub alpha: Option<AlgebraElement>,
    /// Direction-update coefficient; `None` at step zero and on the
    /// converged step.
    pub beta: Option<AlgebraElement>,
    /// Whether the control term is one-signed, so the iteration may continue.
    pub alpha_feasible: bool,
    /// Flag: the control term is negative somewhere on positive measure.
    pub alpha_negative: bool,
    /// Samples blocking one-signedness of the control term (empty when
    /// feasible).
    pub alpha_witnesses: Vec<usize>,
    /// `sup_X r^T r` at this step.
    pub residual_sup: f64,
    /// Samples where the incoming direction energy `p_{k-1}^T A p_{k-1}`
    /// is at or below tolerance.
    pub failure_set: Vec<usize>,
}

/// Why the iteration stopped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CgVerdict {
    /// Residual dropped below tolerance.
    Successful,
    /// The control term left the one-signed set at this step.
    Infeasible {
        step: usize,
    },
    MaxIterReached,
}

/// A full solve: verdict, the per-iteration trace, and the final iterate.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub verdict: CgVerdict,
    pub records: Vec<CgIterationRecord>,
    pub final_x: FunctionVector,
}

impl CgOutcome {
    pub fn last(&self) -> &CgIterationRecord {
        self.records
            .last()
            .expect("outcome has at least one record")
    }
}

struct AlphaResult {
    alpha: Option<AlgebraElement>,
    feasible: bool,
    negative: bool,
    witnesses: Vec<usize>,
}

/// Zero cutoff for feasibility tests, scaled to the tested element's own
/// sup-magnitude across samples. Residuals and direction energies shrink
/// together as the run converges; an absolute floor would misread healthy
/// late-iteration denominators (of order residual squared) as breakdowns.
fn feasibility_tol(tol: &ToleranceConfig, element: &AlgebraElement) -> ToleranceConfig {
    if tol.relative {
        ToleranceConfig::absolute(tol.tau_zero * element.max_abs())
    } else {
        *tol
    }
}

/// Computes the control term `(r^T p) / (p^T A p)` and its feasibility.
/// A denominator that vanishes on positive measure means the quotient is
/// not a well-defined element, which also makes the step infeasible.
fn compute_alpha(
    a: &FunctionMatrix,
    r: &FunctionVector,
    p: &FunctionVector,
    tol: &ToleranceConfig,
) -> Result<AlphaResult> {
    let ap = a.matvec(p)?;
    let denom = p.dot(&ap)?;
    let denom_tol = feasibility_tol(tol, &denom);
    let denom_violations = denom.s_violations(&denom_tol);
    if !denom_violations.is_empty() {
        return Ok(AlphaResult {
            alpha: None,
            feasible: false,
            negative: false,
            witnesses: denom_violations,
        });
    }
    let alpha = r.dot(p)?.mul(&denom.invert(&denom_tol)?)?;
    let alpha_tol = feasibility_tol(tol, &alpha);
    let witnesses = alpha.s_violations(&alpha_tol);
    let feasible = witnesses.is_empty();
    let tau = alpha_tol.resolve(&[&alpha]);
    let negative = alpha
        .space()
        .positive_indices()
        .iter()
        .any(|&s| alpha.value_at(s) < -tau);
    Ok(AlphaResult {
        alpha: Some(alpha),
        feasible,
        negative,
        witnesses,
    })
}

fn residual_sup(r: &FunctionVector) -> Result<f64> {
    Ok(r.dot(r)?.sup_over_space())
}

/// Validates the system and produces the step-zero record with
/// `r_0 = p_0 = b - A x_0`.
pub fn cg_init(
    a: &FunctionMatrix,
    b: &FunctionVector,
    x0: &FunctionVector,
    cfg: &CgConfig,
) -> Result<CgIterationRecord> {
    if b.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: b.len(),
        });
    }
    if x0.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: x0.len(),
        });
    }
    if !a.is_symmetric(&cfg.tol) {
        return Err(Error::NotSymmetric);
    }
    if !a.is_positive_definite(&cfg.tol) {
        return Err(Error::NotPositiveDefinite {
            detail: "a sample matrix has an eigenvalue at or below tolerance".into(),
        });
    }

    // the starting direction is defined together with the residual
    let r = b.sub(&a.matvec(x0)?)?;
    let p = r.clone();
    let sup = residual_sup(&r)?;

    let alpha = if sup < cfg.residual_threshold() {
        AlphaResult {
            alpha: None,
            feasible: true,
            negative: false,
            witnesses: Vec::new(),
        }
    } else {
        compute_alpha(a, &r, &p, &cfg.tol)?
    };

    Ok(CgIterationRecord {
        k: 0,
        x: x0.clone(),
        r,
        p: Some(p),
        alpha: alpha.alpha,
        beta: None,
        alpha_feasible: alpha.feasible,
        alpha_negative: alpha.negative,
        alpha_witnesses: alpha.witnesses,
        residual_sup: sup,
        failure_set: Vec::new(),
    })
}

/// Advances one step from a feasible record.
///
/// The incoming direction energy `p_{k-1}^T A p_{k-1}` must be one-signed;
/// its at-or-below-tolerance samples are recorded as the failure set, and a
/// positive-measure failure aborts with `DenominatorNotInvertible`.
pub fn cg_step(
    a: &FunctionMatrix,
    b: &FunctionVector,
    prev: &CgIterationRecord,
    cfg: &CgConfig,
) -> Result<CgIterationRecord> {
    let alpha_prev = prev
        .alpha
        .as_ref()
        .expect("cg_step requires a record whose control term was computed");
    let p_prev = prev
        .p
        .as_ref()
        .expect("a record with a control term carries a direction");
    assert!(
        prev.alpha_feasible,
        "cg_step requires a feasible previous record"
    );

    let ap_prev = a.matvec(p_prev)?;
    let denom_prev = p_prev.dot(&ap_prev)?;
    let denom_tol = feasibility_tol(&cfg.tol, &denom_prev);
    let tau = denom_tol.resolve(&[&denom_prev]);
    let failure_set: Vec<usize> = (0..denom_prev.values().len())
        .filter(|&s| denom_prev.value_at(s) <= tau)
        .collect();
    if !denom_prev.in_s(&denom_tol) {
        return Err(Error::DenominatorNotInvertible {
            samples: denom_prev.s_violations(&denom_tol),
        });
    }

    let x = prev.x.add(&p_prev.scale(alpha_prev)?)?;
    let r = b.sub(&a.matvec(&x)?)?;
    let sup = residual_sup(&r)?;

    // converged: the run stops here, before the next direction is formed
    if sup < cfg.residual_threshold() {
        return Ok(CgIterationRecord {
            k: prev.k + 1,
            x,
            r,
            p: None,
            alpha: None,
            beta: None,
            alpha_feasible: true,
            alpha_negative: false,
            alpha_witnesses: Vec::new(),
            residual_sup: sup,
            failure_set,
        });
    }

    let beta = r.dot(&ap_prev)?.mul(&denom_prev.invert(&denom_tol)?)?;
    let p = r.sub(&p_prev.scale(&beta)?)?;
    let alpha = compute_alpha(a, &r, &p, &cfg.tol)?;

    Ok(CgIterationRecord {
        k: prev.k + 1,
        x,
        r,
        p: Some(p),
        alpha: alpha.alpha,
        beta: Some(beta),
        alpha_feasible: alpha.feasible,
        alpha_negative: alpha.negative,
        alpha_witnesses: alpha.witnesses,
        residual_sup: sup,
        failure_set,
    })
}

/// Runs the iteration to a verdict. Success is checked before feasibility,
/// so a converged step never reports infeasibility.
pub fn cg_solve(
    a: &FunctionMatrix,
    b: &FunctionVector,
    x0: Option<&FunctionVector>,
    cfg: &CgConfig,
) -> Result<CgOutcome> {
    let zero;
    let x0 = match x0 {
        Some(x) => x,
        None => {
            zero = FunctionVector::zero(b.space(), b.len());
            &zero
        }
    };
    let max_iter = cfg.effective_max_iter(a.n());
    let mut records = vec![cg_init(a, b, x0, cfg)?];

    loop {
        let last = records.last().expect("records never empty");
        // success first, then the iteration cap: a run that stops here
        // anyway should not be blamed on a floor-level control term
        if last.residual_sup < cfg.residual_threshold() {
            let final_x = last.x.clone();
            return Ok(CgOutcome {
                verdict: CgVerdict::Successful,
                records,
                final_x,
            });
        }
        if last.k >= max_iter {
            let final_x = last.x.clone();
            return Ok(CgOutcome {
                verdict: CgVerdict::MaxIterReached,
                records,
                final_x,
            });
        }
        if !last.alpha_feasible {
            let step = last.k;
            let final_x = last.x.clone();
            return Ok(CgOutcome {
                verdict: CgVerdict::Infeasible { step },
                records,
                final_x,
            });
        }
        let next = cg_step(a, b, last, cfg)?;
        records.push(next);
    }
}

/// The spanning set `[y, Ay, ..., A^k y]` of the Krylov module.
pub fn krylov_basis(
    a: &FunctionMatrix,
    y: &FunctionVector,
    k: usize,
) -> Result<Vec<FunctionVector>> {
    let mut basis = Vec::with_capacity(k + 1);
    basis.push(y.clone());
    for _ in 0..k {
        let next = a.matvec(basis.last().expect("nonempty"))?;
        basis.push(next);
    }
    Ok(basis)
}

/// Sup-norm maxima of the orthogonality relations across a trace, plus the
/// worst relative residual of expressing iterates in the Krylov basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    /// max over i < j of `sup_X |p_i^T r_j|`.
    pub max_p_dot_r: f64,
    /// max over i != j of `sup_X |r_i^T r_j|`.
    pub max_r_dot_r: f64,
    /// max over i != j of `sup_X |<p_i, p_j>_A|`.
    pub max_p_a_p: f64,
    /// Worst relative residual of projecting `r_j` and `p_j` onto
    /// `span{r_0, A r_0, ..., A^j r_0}`, per sample.
    pub max_krylov_residual: f64,
    pub pairs_checked: usize,
}

/// Least-squares residual of `target` against `columns` at one sample,
/// relative to the target norm. Modified Gram-Schmidt with one
/// reorthogonalization pass.
fn projection_residual(columns: &[Vec<f64>], target: &[f64]) -> f64 {
    let t_norm = target.iter().map(|v| v * v).sum::<f64>().sqrt();
    if t_norm == 0.0 {
        return 0.0;
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for col in columns {
        let orig_norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if orig_norm == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = col.iter().map(|x| x / orig_norm).collect();
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut residual: Vec<f64> = target.to_vec();
    for _ in 0..2 {
        for q in &basis {
            let c: f64 = residual.iter().zip(q).map(|(a, b)| a * b).sum();
            residual.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
    }
    residual.iter().map(|v| v * v).sum::<f64>().sqrt() / t_norm
}

/// Measures how well a trace satisfies the pairwise orthogonality relations
/// and the Krylov spanning property.
pub fn verify_orthogonality(
    outcome: &CgOutcome,
    a: &FunctionMatrix,
    _tol: &ToleranceConfig,
) -> Result<OrthogonalityReport> {
    let records = &outcome.records;
    let mut max_p_dot_r = 0.0_f64;
    let mut max_r_dot_r = 0.0_f64;
    let mut max_p_a_p = 0.0_f64;
    let mut pairs = 0;

    for i in 0..records.len() {
        for j in i + 1..records.len() {
            if let Some(p_i) = &records[i].p {
                let pr = p_i.dot(&records[j].r)?;
                max_p_dot_r = max_p_dot_r.max(pr.abs().sup_over_space());
                if let Some(p_j) = &records[j].p {
                    let pap = a.a_inner(p_i, p_j)?;
                    max_p_a_p = max_p_a_p.max(pap.abs().sup_over_space());
                }
            }
            let rr = records[i].r.dot(&records[j].r)?;
            max_r_dot_r = max_r_dot_r.max(rr.abs().sup_over_space());
            pairs += 1;
        }
    }

    let mut max_krylov_residual = 0.0_f64;
    if records.len() > 1 {
        let powers = krylov_basis(a, &records[0].r, records.len() - 1)?;
        let space = records[0].r.space().clone();
        for (j, record) in records.iter().enumerate() {
            for &s in space.positive_indices() {
                let columns: Vec<Vec<f64>> =
                    powers[..=j].iter().map(|z| z.sample_values(s)).collect();
                let r_res = projection_residual(&columns, &record.r.sample_values(s));
                max_krylov_residual = max_krylov_residual.max(r_res);
                if let Some(p) = &record.p {
                    let p_res = projection_residual(&columns, &p.sample_values(s));
                    max_krylov_residual = max_krylov_residual.max(p_res);
                }
            }
        }
    }

    Ok(OrthogonalityReport {
        max_p_dot_r,
        max_r_dot_r,
        max_p_a_p,
        max_krylov_residual,
        pairs_checked: pairs,
    })
}
