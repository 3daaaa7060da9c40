//! Seeded test-problem generation.
//!
//! The random generator builds `A(x) = C + E(x)`: a constant symmetric
//! positive definite core with a prescribed spectral spread plus a small
//! symmetric function-valued perturbation, then shifts and scales the result
//! so the global spectral extrema land exactly on `[1, kappa_target]`.
//!
//! The mirrored generator builds a deliberately infeasible two-sample
//! problem: the system at sample 0 is the identity and converges in one
//! step, the system at sample 1 has two distinct eigenvalues and needs two.
//! After the first step the residual vanishes at sample 0 only, the next
//! control term cannot be one-signed, and the function-valued run must stop
//! even though both per-sample systems are solvable.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, MeasureSpace, ToleranceConfig};
use crate::error::{Error, Result};
use crate::linalg::{FunctionMatrix, FunctionVector};

/// Provenance carried inside a problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemMetadata {
    pub generator: String,
    pub seed: u64,
    pub kappa_target: f64,
    pub perturbation: f64,
}

/// A ready-to-solve system: space, coefficient matrix, right-hand side, and
/// an optional starting point.
#[derive(Debug, Clone)]
pub struct Problem {
    pub space: Arc<MeasureSpace>,
    pub a: FunctionMatrix,
    pub b: FunctionVector,
    pub x0: Option<FunctionVector>,
    pub metadata: ProblemMetadata,
}

impl Problem {
    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn samples(&self) -> usize {
        self.space.len()
    }
}

/// Which construction `generate` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorMode {
    Random,
    Mirrored,
}

pub fn generate(
    mode: GeneratorMode,
    n: usize,
    m: usize,
    kappa_target: f64,
    perturbation: f64,
    seed: u64,
) -> Result<Problem> {
    match mode {
        GeneratorMode::Random => generate_problem(n, m, kappa_target, perturbation, seed),
        GeneratorMode::Mirrored => generate_mirrored(n, seed),
    }
}

/// Orthonormalizes the rows of a square matrix in place (modified
/// Gram-Schmidt). Rows that collapse are replaced by standard basis vectors
/// and re-orthogonalized, so the result is always a full basis.
fn orthonormal_rows(q: &mut [f64], n: usize) {
    for i in 0..n {
        for _ in 0..2 {
            for prev in 0..i {
                let dot: f64 = (0..n).map(|j| q[i * n + j] * q[prev * n + j]).sum();
                for j in 0..n {
                    q[i * n + j] -= dot * q[prev * n + j];
                }
            }
        }
        let norm: f64 = (0..n)
            .map(|j| q[i * n + j] * q[i * n + j])
            .sum::<f64>()
            .sqrt();
        if norm > 1e-8 {
            for j in 0..n {
                q[i * n + j] /= norm;
            }
        } else {
            for j in 0..n {
                q[i * n + j] = if j == i { 1.0 } else { 0.0 };
            }
        }
    }
}

/// Deterministic random problem with global condition number exactly
/// `kappa_target` and a per-sample symmetric perturbation of relative size
/// `perturbation`.
pub fn generate_problem(
    n: usize,
    m: usize,
    kappa_target: f64,
    perturbation: f64,
    seed: u64,
) -> Result<Problem> {
    if n < 1 || m < 1 {
        return Err(Error::BadParameters {
            detail: format!("n and samples must be at least 1 (got n={n}, samples={m})"),
        });
    }
    if kappa_target < 1.0 || kappa_target.is_nan() {
        return Err(Error::BadParameters {
            detail: format!("kappa target must be at least 1 (got {kappa_target})"),
        });
    }
    if !(0.0..1.0).contains(&perturbation) {
        return Err(Error::BadParameters {
            detail: format!("perturbation must lie in [0, 1) (got {perturbation})"),
        });
    }
    if kappa_target > 1.0 && n == 1 && perturbation == 0.0 {
        return Err(Error::BadParameters {
            detail: "a 1x1 constant system always has kappa 1; raise n or perturbation".into(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = MeasureSpace::uniform(m)?;

    // Constant core C = Q^T diag(mu) Q with spread [1, kappa_target].
    let mut q = vec![0.0; n * n];
    for v in q.iter_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    orthonormal_rows(&mut q, n);
    let mut mu = vec![1.0; n];
    if n >= 2 {
        mu[n - 1] = kappa_target;
        for item in mu.iter_mut().take(n - 1).skip(1) {
            *item = (rng.random_range(0.0..1.0) * kappa_target.ln()).exp();
        }
    }
    let mut core = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            core[i * n + j] = (0..n).map(|k| q[k * n + i] * mu[k] * q[k * n + j]).sum();
        }
    }

    // Per-sample symmetric perturbation; entry bound perturbation / n keeps
    // the spectral shift below `perturbation` at every sample.
    let cap = perturbation / n as f64;
    let mut entry_values = vec![vec![0.0_f64; m]; n * n];
    for s in 0..m {
        for i in 0..n {
            for j in i..n {
                let e = if perturbation > 0.0 {
                    rng.random_range(-cap..cap)
                } else {
                    0.0
                };
                entry_values[i * n + j][s] = core[i * n + j] + e;
                if j != i {
                    entry_values[j * n + i][s] = core[j * n + i] + e;
                }
            }
        }
    }

    let build_matrix = |values: &[Vec<f64>]| -> Result<FunctionMatrix> {
        FunctionMatrix::from_rows(
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| AlgebraElement::from_values(&space, values[i * n + j].clone()))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        )
    };
    let raw = build_matrix(&entry_values)?;

    // Shift and scale so the global extrema land exactly on
    // [1, kappa_target].
    let tol = ToleranceConfig::default();
    let spectrum = raw.eigen_functions(&tol)?;
    let spread = spectrum.lambda_over - spectrum.lambda_under;
    if kappa_target > 1.0 {
        if spread <= 0.0 {
            return Err(Error::BadParameters {
                detail: "degenerate spectrum cannot be stretched to kappa > 1".into(),
            });
        }
        let shift =
            (spectrum.lambda_over - kappa_target * spectrum.lambda_under) / (kappa_target - 1.0);
        let scale = 1.0 / (spectrum.lambda_under + shift);
        for i in 0..n {
            for v in entry_values[i * n + i].iter_mut() {
                *v += shift;
            }
        }
        for cell in entry_values.iter_mut() {
            for v in cell.iter_mut() {
                *v *= scale;
            }
        }
    } else {
        // kappa 1 needs an exact multiple of the identity
        let c = rng.random_range(0.5..2.0);
        for i in 0..n {
            for j in 0..n {
                let v = if i == j { c } else { 0.0 };
                entry_values[i * n + j] = vec![v; m];
            }
        }
    }
    let a = build_matrix(&entry_values)?;

    let mut b_entries = Vec::with_capacity(n);
    for _ in 0..n {
        let values: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        b_entries.push(AlgebraElement::from_values(&space, values)?);
    }
    let b = FunctionVector::new(b_entries)?;

    Ok(Problem {
        space,
        a,
        b,
        x0: None,
        metadata: ProblemMetadata {
            generator: "random".into(),
            seed,
            kappa_target,
            perturbation,
        },
    })
}

/// Two-sample problem whose per-sample systems converge at different steps,
/// forcing an infeasible verdict in the function-valued run.
pub fn generate_mirrored(n: usize, seed: u64) -> Result<Problem> {
    if n < 2 {
        return Err(Error::BadParameters {
            detail: format!("the mirrored construction needs n >= 2 (got {n})"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = MeasureSpace::uniform(2)?;

    let mut rows = vec![vec![AlgebraElement::zero(&space); n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        // sample 0: identity; sample 1: eigenvalues {1, 2}
        let second = if i == 0 { 1.0 } else { 2.0 };
        row[i] = AlgebraElement::from_values(&space, vec![1.0, second])?;
    }
    let a = FunctionMatrix::from_rows(rows)?;

    let mut b_entries = Vec::with_capacity(n);
    for _ in 0..n {
        let values: Vec<f64> = (0..2).map(|_| rng.random_range(0.5..1.5)).collect();
        b_entries.push(AlgebraElement::from_values(&space, values)?);
    }
    let b = FunctionVector::new(b_entries)?;

    Ok(Problem {
        space,
        a,
        b,
        x0: None,
        metadata: ProblemMetadata {
            generator: "mirrored".into(),
            seed,
            kappa_target: 2.0,
            perturbation: 0.0,
        },
    })
}
