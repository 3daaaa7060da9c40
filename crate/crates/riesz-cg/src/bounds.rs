//! Chebyshev polynomials, scaled min-max envelopes, and the convergence-rate
//! verifier.
//!
//! The rate estimate compares the A-norm error of each iterate against
//! `2 ((sqrt(kappa)-1)/(sqrt(kappa)+1))^k` times the initial error, with
//! `kappa` taken from the global spectral extrema over the whole space.
//! Interval sups of polynomials are approximated on a Chebyshev-spaced grid
//! and are therefore lower estimates of the true sup.

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, ToleranceConfig};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::linalg::{FunctionMatrix, FunctionVector};
use crate::solver::CgOutcome;

/// Default number of grid points for interval sups.
pub const DEFAULT_GRID: usize = 257;

/// Chebyshev polynomial `C_k(t)`: cosine form inside `[-1, 1]`, hyperbolic
/// form outside.
pub fn chebyshev(k: u32, t: f64) -> f64 {
    if t.abs() <= 1.0 {
        (k as f64 * t.acos()).cos()
    } else {
        let sign = if t < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        sign * (k as f64 * t.abs().acosh()).cosh()
    }
}

/// Three-term recurrence evaluation of `C_k(t)`.
pub fn chebyshev_recurrence(k: u32, t: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = t;
    for _ in 1..k {
        let next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Closed-form evaluation via powers of `t + sqrt(t^2 - 1)`; inside the
/// interval the surd is imaginary and the value is the real part of the
/// complex power.
pub fn chebyshev_closed_form(k: u32, t: f64) -> f64 {
    if t.abs() >= 1.0 {
        let w = t + (t * t - 1.0).sqrt();
        let wk = w.powi(k as i32);
        0.5 * (wk + 1.0 / wk)
    } else {
        // unit-modulus complex number t + i sqrt(1 - t^2), powered by
        // repeated multiplication
        let (mut re, mut im) = (1.0_f64, 0.0_f64);
        let (zr, zi) = (t, (1.0 - t * t).sqrt());
        for _ in 0..k {
            let nr = re * zr - im * zi;
            let ni = re * zi + im * zr;
            re = nr;
            im = ni;
        }
        re
    }
}

/// `ln C_k(x)` for `x >= 1`, accumulated in the log domain so large `k`
/// cannot overflow.
fn ln_chebyshev_outside(k: u32, x: f64) -> f64 {
    debug_assert!(x >= 1.0);
    let u = x.acosh();
    let ku = k as f64 * u;
    ku + (-2.0 * ku).exp().ln_1p() - std::f64::consts::LN_2
}

/// The min-max polynomial for the interval `[a, b]`: the degree-`k`
/// Chebyshev polynomial rescaled to the interval and normalized to take the
/// value 1 at zero.
pub fn ch_scaled(k: u32, t: f64, a: f64, b: f64) -> Result<f64> {
    if a <= 0.0 || b <= a {
        return Err(Error::BadInterval { a, b });
    }
    if k == 0 {
        return Ok(1.0);
    }
    let ln_den = ln_chebyshev_outside(k, (b + a) / (b - a));
    let xt = (b + a - 2.0 * t) / (b - a);
    if xt.abs() <= 1.0 {
        Ok((k as f64 * xt.acos()).cos() * (-ln_den).exp())
    } else {
        let sign = if xt < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        let ln_num = ln_chebyshev_outside(k, xt.abs());
        Ok(sign * (ln_num - ln_den).exp())
    }
}

/// Monomial coefficients of the scaled min-max polynomial, ascending degree.
/// Exact for small `k`; used to cross-check the direct evaluation path.
pub fn ch_scaled_coefficients(k: u32, a: f64, b: f64) -> Result<RealPolynomial> {
    if a <= 0.0 || b <= a {
        return Err(Error::BadInterval { a, b });
    }
    // C_k composed with the affine map (b + a - 2T) / (b - a), built by the
    // three-term recurrence over coefficient vectors.
    let c0 = (b + a) / (b - a);
    let c1 = -2.0 / (b - a);
    let mut prev = vec![1.0]; // C_0 of the affine argument
    let mut cur = vec![c0, c1]; // C_1 of the affine argument
    if k == 0 {
        return Ok(RealPolynomial::new(vec![1.0]));
    }
    for _ in 1..k {
        // next = 2 * (c0 + c1 T) * cur - prev
        let mut next = vec![0.0; cur.len() + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i] += 2.0 * c0 * c;
            next[i + 1] += 2.0 * c1 * c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = cur;
        cur = next;
    }
    let den = chebyshev(k, (b + a) / (b - a));
    Ok(RealPolynomial::new(
        cur.into_iter().map(|c| c / den).collect(),
    ))
}

/// The scalar rate factor `2 ((sqrt(kappa)-1)/(sqrt(kappa)+1))^k`.
pub fn error_bound(kappa: f64, k: u32) -> Result<f64> {
    if kappa < 1.0 || kappa.is_nan() {
        return Err(Error::BadKappa { kappa });
    }
    let rho = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
    Ok(2.0 * rho.powi(k as i32))
}

/// A polynomial with real coefficients, ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl RealPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }
}

/// A polynomial whose coefficients are algebra elements.
#[derive(Debug, Clone)]
pub struct AlgebraPolynomial {
    coeffs: Vec<AlgebraElement>,
}

impl AlgebraPolynomial {
    pub fn new(coeffs: Vec<AlgebraElement>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        let space = coeffs[0].space();
        if !coeffs
            .iter()
            .all(|c| crate::algebra::same_space(c.space(), space))
        {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { coeffs })
    }

    /// Lifts a real polynomial to constant coefficient functions.
    pub fn from_real(
        space: &std::sync::Arc<crate::algebra::MeasureSpace>,
        p: &RealPolynomial,
    ) -> Result<Self> {
        Self::new(
            p.coeffs()
                .iter()
                .map(|&c| AlgebraElement::constant(space, c))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn coeffs(&self) -> &[AlgebraElement] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Numeric value `q(x, t)` at one sample.
    pub fn eval_at_sample(&self, sample: usize, t: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * t + c.value_at(sample))
    }

    /// Applies the polynomial to a matrix and a vector: `q(A) x`, by Horner
    /// over matrix-vector products.
    pub fn apply_matrix(&self, a: &FunctionMatrix, x: &FunctionVector) -> Result<FunctionVector> {
        let deg = self.degree();
        let mut v = x.scale(&self.coeffs[deg])?;
        for i in (0..deg).rev() {
            v = a.matvec(&v)?.add(&x.scale(&self.coeffs[i])?)?;
        }
        Ok(v)
    }
}

/// Chebyshev-spaced evaluation grid on `[a, b]`, endpoints included.
fn chebyshev_grid(a: f64, b: f64, grid: usize) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (0..grid)
        .map(|j| mid - half * (std::f64::consts::PI * j as f64 / (grid - 1) as f64).cos())
        .collect()
}

/// Grid sup of `|p|` on `[a, b]`. A lower estimate of the true sup.
pub fn m_sup(p: &RealPolynomial, a: f64, b: f64, grid: usize) -> Result<f64> {
    if a > b || grid < 2 {
        return Err(Error::BadInterval { a, b });
    }
    Ok(chebyshev_grid(a, b, grid)
        .into_iter()
        .map(|t| p.eval(t).abs())
        .fold(0.0, f64::max))
}

/// Grid sup of `|q(x, t)|` over positive-weight samples and `t` in `[a, b]`.
pub fn m_sup_a(q: &AlgebraPolynomial, a: f64, b: f64, grid: usize) -> Result<f64> {
    m_sup_a_mode(q, a, b, grid, ExecMode::Auto)
}

pub(crate) fn m_sup_a_mode(
    q: &AlgebraPolynomial,
    a: f64,
    b: f64,
    grid: usize,
    mode: ExecMode,
) -> Result<f64> {
    if a > b || grid < 2 {
        return Err(Error::BadInterval { a, b });
    }
    let ts = chebyshev_grid(a, b, grid);
    let space = q.coeffs[0].space().clone();
    let positive = space.positive_indices().to_vec();
    let sup = exec::max_by_index(mode, positive.len(), |idx| {
        let s = positive[idx];
        ts.iter()
            .map(|&t| q.eval_at_sample(s, t).abs())
            .fold(0.0, f64::max)
    });
    Ok(sup)
}

/// One row of the rate report: the A-norm error at step `k` against the
/// theoretical envelope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateCheck {
    pub k: usize,
    /// Sup over the space of the pointwise A-norm error.
    pub lhs_sup: f64,
    /// Envelope at the sup level: factor times the sup of the initial error.
    pub rhs: f64,
    /// True when the estimate holds pointwise at every positive-weight
    /// sample (which implies the sup-level inequality).
    pub holds: bool,
    pub margin: f64,
}

/// The convergence-rate verdicts for a full solver trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    /// Global condition number from the spectral extrema over the space.
    pub kappa: f64,
    pub lambda_under: f64,
    pub lambda_over: f64,
    /// Range of the per-sample condition numbers, for diagnostics; never
    /// exceeds the global `kappa` that drives the envelope.
    pub kappa_pointwise_min: f64,
    pub kappa_pointwise_max: f64,
    pub per_k: Vec<RateCheck>,
}

impl BoundReport {
    pub fn all_hold(&self) -> bool {
        self.per_k.iter().all(|r| r.holds)
    }
}

/// Checks the rate estimate for every recorded iterate, pointwise at every
/// positive-weight sample and at the sup level.
///
/// `x_star` should solve the system to well below the solver tolerance;
/// per-sample direct factorization is the intended source.
pub fn verify_rate(
    outcome: &CgOutcome,
    a: &FunctionMatrix,
    x_star: &FunctionVector,
    tol: &ToleranceConfig,
) -> Result<BoundReport> {
    let spectrum = a.eigen_functions(tol)?;
    let lambda_refs: Vec<&AlgebraElement> = spectrum.lambdas.iter().collect();
    let tau_spectrum = tol.resolve(&lambda_refs);
    if spectrum.lambda_under <= tau_spectrum {
        return Err(Error::SingularSpectrum {
            lambda_min: spectrum.lambda_under,
        });
    }
    let kappa = spectrum.kappa;
    let n = spectrum.lambdas.len();
    let mut kappa_pointwise_min = f64::INFINITY;
    let mut kappa_pointwise_max = 0.0_f64;
    for &s in x_star.space().positive_indices() {
        let local = spectrum.lambdas[n - 1].value_at(s) / spectrum.lambdas[0].value_at(s);
        kappa_pointwise_min = kappa_pointwise_min.min(local);
        kappa_pointwise_max = kappa_pointwise_max.max(local);
    }

    let x0 = &outcome.records[0].x;
    let e0 = a.a_norm_pointwise(&x_star.sub(x0)?)?;
    let e0_sup = e0.sup_over_space();
    let positive = x_star.space().positive_indices().to_vec();

    let mut per_k = Vec::with_capacity(outcome.records.len());
    for record in &outcome.records {
        let diff = x_star.sub(&record.x)?;
        let lhs = a.a_norm_pointwise(&diff)?;
        let factor = error_bound(kappa, record.k as u32)?;
        let tau = tol.resolve(&[&lhs, &e0]);
        let holds = positive
            .iter()
            .all(|&s| lhs.value_at(s) <= factor * e0.value_at(s) + tau);
        let lhs_sup = lhs.sup_over_space();
        let rhs = factor * e0_sup;
        per_k.push(RateCheck {
            k: record.k,
            lhs_sup,
            rhs,
            holds,
            margin: rhs - lhs_sup,
        });
    }
    Ok(BoundReport {
        kappa,
        lambda_under: spectrum.lambda_under,
        lambda_over: spectrum.lambda_over,
        kappa_pointwise_min,
        kappa_pointwise_max,
        per_k,
    })
}
