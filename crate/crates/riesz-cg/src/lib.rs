//! Conjugate gradient solving for linear systems whose coefficients are
//! sampled measurable functions.
//!
//! A function on a finite measure space is a value per sample point; "almost
//! everywhere" means "at every sample with positive weight". All solver
//! arithmetic happens pointwise in that algebra, so one run advances the
//! whole family of per-sample systems at once and either produces a
//! function-valued solution or stops with an explicit verdict about which
//! samples blocked it.
//!
//! The crate is organized around verification:
//!
//! * [`algebra`]: the ordered, lattice, and localization structure of the
//!   sampled-function ring.
//! * [`linalg`]: vectors, matrices, A-inner products, per-sample spectra,
//!   and bilinear-form decompositions.
//! * [`solver`]: the conjugate gradient iteration with feasibility verdicts
//!   and full traces, plus orthogonality measurements.
//! * [`bounds`]: Chebyshev machinery and the convergence-rate envelope.
//! * [`problem`] / [`oracle`]: seeded generators and the independent
//!   per-sample scalar reference (direct solves plus scalar CG).
//! * [`io`]: JSON problem/trace/oracle formats and CSV summaries.
//!
//! With the default `parallel` feature, per-sample work (eigendecomposition,
//! oracle solves, grid sups, large pointwise maps) runs on rayon; results
//! are bit-identical to the sequential build.

pub mod algebra;
pub mod bounds;
pub mod error;
#[doc(hidden)]
pub mod exec;
pub mod io;
mod jacobi;
pub mod linalg;
pub mod oracle;
pub mod problem;
pub mod solver;

pub use algebra::{AlgebraElement, MeasureSpace, ToleranceConfig};
pub use bounds::{
    ch_scaled, chebyshev, error_bound, m_sup, m_sup_a, verify_rate, AlgebraPolynomial, BoundReport,
    RateCheck, RealPolynomial,
};
pub use error::{Error, Result};
pub use linalg::{
    poly_apply_bound_check, FormDecomposition, FunctionMatrix, FunctionVector, SpectralSummary,
};
pub use oracle::{compare, pointwise_oracle, CompareReport, OracleResult};
pub use problem::{generate, generate_mirrored, generate_problem, GeneratorMode, Problem};
pub use solver::{
    cg_init, cg_solve, cg_step, krylov_basis, verify_orthogonality, CgConfig, CgIterationRecord,
    CgOutcome, CgVerdict, OrthogonalityReport,
};

/// Mode-pinned entry points for the benchmark suite, so sequential and
/// parallel execution of the same kernels can be timed against each other
/// in one process.
#[doc(hidden)]
pub mod bench_support {
    pub use crate::exec::{batch_try, map, max_by_index, zip_map, ExecMode};

    use crate::algebra::ToleranceConfig;
    use crate::bounds::AlgebraPolynomial;
    use crate::linalg::{FunctionMatrix, SpectralSummary};
    use crate::oracle::OracleResult;
    use crate::problem::Problem;
    use crate::solver::CgConfig;
    use crate::Result;

    pub fn eigen_functions_mode(
        a: &FunctionMatrix,
        tol: &ToleranceConfig,
        mode: ExecMode,
    ) -> Result<SpectralSummary> {
        a.eigen_functions_mode(tol, mode)
    }

    pub fn pointwise_oracle_mode(
        problem: &Problem,
        cfg: &CgConfig,
        mode: ExecMode,
    ) -> Result<OracleResult> {
        crate::oracle::pointwise_oracle_mode(problem, cfg, mode)
    }

    pub fn m_sup_a_mode(
        q: &AlgebraPolynomial,
        a: f64,
        b: f64,
        grid: usize,
        mode: ExecMode,
    ) -> Result<f64> {
        crate::bounds::m_sup_a_mode(q, a, b, grid, mode)
    }
}
