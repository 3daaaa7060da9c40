//! Vectors and matrices over the sampled-function algebra.
//!
//! Inner products and norms taken against a symmetric positive definite
//! matrix `A` are themselves algebra elements, one value per sample. The
//! spectral routines work per sample: each positive-weight sample gets its
//! own dense symmetric eigendecomposition, and the sorted eigenvalues are
//! reassembled into eigenvalue functions.

use std::sync::Arc;

use crate::algebra::{same_space, AlgebraElement, MeasureSpace, ToleranceConfig};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::jacobi;

/// A column vector of algebra elements on a shared space.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionVector {
    entries: Vec<AlgebraElement>,
}

impl FunctionVector {
    pub fn new(entries: Vec<AlgebraElement>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        let space = entries[0].space();
        if !entries.iter().all(|e| same_space(e.space(), space)) {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { entries })
    }

    pub fn zero(space: &Arc<MeasureSpace>, n: usize) -> Self {
        Self {
            entries: (0..n).map(|_| AlgebraElement::zero(space)).collect(),
        }
    }

    /// Standard basis vector with a constant one in position `index`.
    pub fn standard_basis(space: &Arc<MeasureSpace>, n: usize, index: usize) -> Self {
        let mut v = Self::zero(space, n);
        v.entries[index] = AlgebraElement::one(space);
        v
    }

    /// Builds a vector of constant functions from plain reals.
    pub fn from_constants(space: &Arc<MeasureSpace>, values: &[f64]) -> Result<Self> {
        Self::new(
            values
                .iter()
                .map(|&v| AlgebraElement::constant(space, v))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[AlgebraElement] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &AlgebraElement {
        &self.entries[i]
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        self.entries[0].space()
    }

    /// The numeric column at one sample point.
    pub fn sample_values(&self, sample: usize) -> Vec<f64> {
        self.entries.iter().map(|e| e.value_at(sample)).collect()
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        Self::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.add(b))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        Self::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.sub(b))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Scales every entry by one algebra element (the module action).
    pub fn scale(&self, factor: &AlgebraElement) -> Result<Self> {
        Self::new(
            self.entries
                .iter()
                .map(|e| e.mul(factor))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn scale_scalar(&self, r: f64) -> Result<Self> {
        Self::new(
            self.entries
                .iter()
                .map(|e| e.scalar_mul(r))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// The algebra-valued dot product `x^T y`.
    pub fn dot(&self, other: &Self) -> Result<AlgebraElement> {
        self.check_len(other)?;
        let mut acc = self.entries[0].mul(&other.entries[0])?;
        for i in 1..self.len() {
            acc = acc.add(&self.entries[i].mul(&other.entries[i])?)?;
        }
        Ok(acc)
    }

    /// True when every entry vanishes outside a null set.
    pub fn is_ae_zero(&self, tol: &ToleranceConfig) -> bool {
        self.entries.iter().all(|e| e.is_ae_zero(tol))
    }

    /// Sup over positive-weight samples of the Euclidean norm of the column.
    pub fn sup_euclidean(&self) -> f64 {
        let space = self.space().clone();
        space
            .positive_indices()
            .iter()
            .map(|&s| {
                self.entries
                    .iter()
                    .map(|e| e.value_at(s) * e.value_at(s))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// A square matrix of algebra elements, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionMatrix {
    n: usize,
    entries: Vec<AlgebraElement>,
}

impl FunctionMatrix {
    pub fn from_rows(rows: Vec<Vec<AlgebraElement>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            entries.extend(row);
        }
        let space = entries[0].space();
        if !entries.iter().all(|e| same_space(e.space(), space)) {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { n, entries })
    }

    /// Builds a matrix of constant functions from an `n x n` scalar array.
    pub fn from_constant_rows(space: &Arc<MeasureSpace>, rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|row| {
                    row.iter()
                        .map(|&v| AlgebraElement::constant(space, v))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn identity(space: &Arc<MeasureSpace>, n: usize) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(if i == j {
                    AlgebraElement::one(space)
                } else {
                    AlgebraElement::zero(space)
                });
            }
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &AlgebraElement {
        &self.entries[i * self.n + j]
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        self.entries[0].space()
    }

    /// The numeric matrix at one sample point, row-major.
    pub fn sample_matrix(&self, sample: usize) -> Vec<f64> {
        self.entries.iter().map(|e| e.value_at(sample)).collect()
    }

    /// Sup over positive-weight samples of the Frobenius norm.
    pub fn sup_frobenius(&self) -> f64 {
        self.space()
            .positive_indices()
            .iter()
            .map(|&s| {
                self.entries
                    .iter()
                    .map(|e| e.value_at(s) * e.value_at(s))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    fn check_vector(&self, x: &FunctionVector) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if !same_space(self.space(), x.space()) {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    /// Matrix-vector product in the algebra: entry `i` is `sum_j A_ij x_j`.
    pub fn matvec(&self, x: &FunctionVector) -> Result<FunctionVector> {
        self.check_vector(x)?;
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut acc = self.get(i, 0).mul(x.entry(0))?;
            for j in 1..self.n {
                acc = acc.add(&self.get(i, j).mul(x.entry(j))?)?;
            }
            out.push(acc);
        }
        FunctionVector::new(out)
    }

    /// The algebra-valued inner product `x^T A y`.
    pub fn a_inner(&self, x: &FunctionVector, y: &FunctionVector) -> Result<AlgebraElement> {
        x.dot(&self.matvec(y)?)
    }

    /// The algebra-valued norm `sqrt(x^T A x)`.
    ///
    /// Returns the zero element for an almost-everywhere zero vector and
    /// insists on strict positivity of the quadratic form otherwise.
    pub fn a_norm(&self, x: &FunctionVector, tol: &ToleranceConfig) -> Result<AlgebraElement> {
        if x.is_ae_zero(tol) {
            return Ok(AlgebraElement::zero(x.space()));
        }
        let q = self.a_inner(x, x)?;
        q.sqrt_strict(tol).map_err(|e| match e {
            Error::NotStrictlyPositive { samples } => Error::NotPositiveDefinite {
                detail: format!("x^T A x not strictly positive at samples {samples:?}"),
            },
            other => other,
        })
    }

    /// Pointwise `sqrt(max(x^T A x, 0))`, total even for vectors that vanish
    /// on part of the space. This is the norm used by the verification
    /// reports, where iterates legitimately shrink below tolerance.
    pub fn a_norm_pointwise(&self, x: &FunctionVector) -> Result<AlgebraElement> {
        let q = self.a_inner(x, x)?;
        let values: Vec<f64> = q.values().iter().map(|&v| v.max(0.0).sqrt()).collect();
        AlgebraElement::from_values(q.space(), values)
    }

    /// Symmetry up to almost-everywhere equality of mirrored entries.
    pub fn is_symmetric(&self, tol: &ToleranceConfig) -> bool {
        for i in 0..self.n {
            for j in i + 1..self.n {
                match self.get(i, j).ae_equal(self.get(j, i), tol) {
                    Ok(true) => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// Pointwise positive definiteness: at every positive-weight sample the
    /// numeric matrix is symmetric with smallest eigenvalue above tolerance.
    pub fn is_positive_definite(&self, tol: &ToleranceConfig) -> bool {
        if !self.is_symmetric(tol) {
            return false;
        }
        let refs: Vec<&AlgebraElement> = self.entries.iter().collect();
        let tau = tol.resolve(&refs);
        self.space().positive_indices().iter().all(|&s| {
            match jacobi::symmetric_eigen(&self.sample_matrix(s), self.n) {
                Some(eig) => eig.values[0] > tau,
                None => false,
            }
        })
    }

    /// Per-sample eigendecomposition assembled into eigenvalue functions
    /// (sorted ascending) and eigenvector functions.
    pub fn eigen_functions(&self, tol: &ToleranceConfig) -> Result<SpectralSummary> {
        self.eigen_functions_mode(tol, ExecMode::Auto)
    }

    pub(crate) fn eigen_functions_mode(
        &self,
        tol: &ToleranceConfig,
        mode: ExecMode,
    ) -> Result<SpectralSummary> {
        if !self.is_symmetric(tol) {
            return Err(Error::NotSymmetric);
        }
        let n = self.n;
        let space = self.space().clone();
        let m = space.len();
        let weights = space.weights().to_vec();

        // Null samples get a canonical decomposition (zero eigenvalues,
        // standard-basis vectors); they never influence the extrema.
        let per_sample = exec::batch_try(mode, m, exec::HEAVY_PAR_MIN, |s| {
            if weights[s] == 0.0 {
                let mut vectors = vec![0.0; n * n];
                for i in 0..n {
                    vectors[i * n + i] = 1.0;
                }
                return Ok((vec![0.0; n], vectors));
            }
            match jacobi::symmetric_eigen(&self.sample_matrix(s), n) {
                Some(eig) => Ok((eig.values, eig.vectors)),
                None => Err(Error::EigenNoConvergence { sample: s }),
            }
        })?;

        let mut lambdas = Vec::with_capacity(n);
        for j in 0..n {
            let values: Vec<f64> = (0..m).map(|s| per_sample[s].0[j]).collect();
            lambdas.push(AlgebraElement::from_values(&space, values)?);
        }
        let mut eigvecs = Vec::with_capacity(n);
        for j in 0..n {
            let mut entries = Vec::with_capacity(n);
            for i in 0..n {
                let values: Vec<f64> = (0..m).map(|s| per_sample[s].1[i * n + j]).collect();
                entries.push(AlgebraElement::from_values(&space, values)?);
            }
            eigvecs.push(FunctionVector::new(entries)?);
        }

        let lambda_under = lambdas[0].inf_over_space();
        let lambda_over = lambdas[n - 1].sup_over_space();
        let kappa = lambda_over / lambda_under;
        Ok(SpectralSummary {
            lambdas,
            eigvecs,
            lambda_under,
            lambda_over,
            kappa,
        })
    }

    /// Diagonalizes the symmetric bilinear form `b(u, v) = u^T B v` by
    /// greedy projection over the algebra.
    ///
    /// Starting from the standard basis, repeatedly selects the remaining
    /// generator whose self-pairing is one-signed and largest in
    /// `inf |b(v,v)|`, then subtracts its `b`-projection from the rest.
    /// Generators whose self-pairing never becomes one-signed form the
    /// radical.
    pub fn orthogonal_decompose(&self, tol: &ToleranceConfig) -> Result<FormDecomposition> {
        if !self.is_symmetric(tol) {
            return Err(Error::NotSymmetric);
        }
        let n = self.n;
        let space = self.space().clone();
        let mut working: Vec<FunctionVector> = (0..n)
            .map(|i| FunctionVector::standard_basis(&space, n, i))
            .collect();
        let mut ortho_basis = Vec::new();
        let mut gram_diagonal = Vec::new();

        loop {
            let mut pivot: Option<(usize, f64, AlgebraElement)> = None;
            for (idx, v) in working.iter().enumerate() {
                let d = self.a_inner(v, v)?;
                if !d.in_s(tol) {
                    continue;
                }
                let merit = d.abs().inf_over_space();
                let better = match &pivot {
                    Some((_, best, _)) => merit > *best,
                    None => true,
                };
                if better {
                    pivot = Some((idx, merit, d));
                }
            }
            let Some((idx, _, d)) = pivot else {
                break;
            };
            let x = working.remove(idx);
            let d_inv = d.invert(tol)?;
            for w in working.iter_mut() {
                let coeff = self.a_inner(&x, w)?.mul(&d_inv)?;
                *w = w.sub(&x.scale(&coeff)?)?;
            }
            ortho_basis.push(x);
            gram_diagonal.push(d);
        }

        Ok(FormDecomposition {
            ortho_basis,
            gram_diagonal,
            radical_basis: working,
        })
    }
}

/// Ordered eigenvalue functions and global spectral extrema of a symmetric
/// matrix over the space.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    /// Eigenvalue functions, ascending at every positive-weight sample.
    pub lambdas: Vec<AlgebraElement>,
    /// Matching eigenvector functions, pointwise orthonormal.
    pub eigvecs: Vec<FunctionVector>,
    /// Infimum over the space of the smallest eigenvalue function.
    pub lambda_under: f64,
    /// Supremum over the space of the largest eigenvalue function.
    pub lambda_over: f64,
    /// `lambda_over / lambda_under`; meaningful when `lambda_under > 0`.
    pub kappa: f64,
}

/// Orthogonal decomposition of a symmetric bilinear form: generators with
/// one-signed self-pairing plus the radical.
#[derive(Debug, Clone)]
pub struct FormDecomposition {
    pub ortho_basis: Vec<FunctionVector>,
    /// `b(x_i, x_i)` for each basis vector, each one-signed.
    pub gram_diagonal: Vec<AlgebraElement>,
    pub radical_basis: Vec<FunctionVector>,
}

/// Evaluates `|q(A) x|_A` against the scalar envelope `M^A(q)` taken over
/// the spectral interval of `A`. Returns the norm element and the envelope;
/// the inequality `sup |q(A)x|_A <= M^A(q) * sup |x|_A` is the caller's to
/// assert.
pub fn poly_apply_bound_check(
    q: &crate::bounds::AlgebraPolynomial,
    a: &FunctionMatrix,
    x: &FunctionVector,
    grid: usize,
    tol: &ToleranceConfig,
) -> Result<(AlgebraElement, f64)> {
    let spectrum = a.eigen_functions(tol)?;
    let qax = q.apply_matrix(a, x)?;
    let lhs = a.a_norm_pointwise(&qax)?;
    let rhs = crate::bounds::m_sup_a(q, spectrum.lambda_under, spectrum.lambda_over, grid)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const TOL: ToleranceConfig = ToleranceConfig {
        tau_zero: 1e-12,
        relative: true,
    };

    fn uniform_space(m: usize) -> Arc<MeasureSpace> {
        MeasureSpace::uniform(m).unwrap()
    }

    fn random_element(
        rng: &mut StdRng,
        space: &Arc<MeasureSpace>,
        lo: f64,
        hi: f64,
    ) -> AlgebraElement {
        let values: Vec<f64> = (0..space.len()).map(|_| rng.random_range(lo..hi)).collect();
        AlgebraElement::from_values(space, values).unwrap()
    }

    fn random_vector(rng: &mut StdRng, space: &Arc<MeasureSpace>, n: usize) -> FunctionVector {
        FunctionVector::new(
            (0..n)
                .map(|_| random_element(rng, space, -2.0, 2.0))
                .collect(),
        )
        .unwrap()
    }

    /// Random symmetric matrix with per-sample entries; SPD when `shift` is
    /// large enough (diagonal dominance).
    fn random_spd(rng: &mut StdRng, space: &Arc<MeasureSpace>, n: usize) -> FunctionMatrix {
        let m = space.len();
        let mut rows: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; m]; n]; n];
        for s in 0..m {
            for i in 0..n {
                for j in i..n {
                    let v = rng.random_range(-1.0..1.0);
                    rows[i][j][s] = v;
                    rows[j][i][s] = v;
                }
                rows[i][i][s] += n as f64 + 1.0;
            }
        }
        FunctionMatrix::from_rows(
            rows.into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|vals| AlgebraElement::from_values(space, vals).unwrap())
                        .collect()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_matvec_is_identity() {
        let s = uniform_space(3);
        let a = FunctionMatrix::identity(&s, 4);
        let mut rng = StdRng::seed_from_u64(42);
        let x = random_vector(&mut rng, &s, 4);
        assert_eq!(a.matvec(&x).unwrap(), x);
    }

    #[test]
    fn constant_diagonal_matvec() {
        let s = uniform_space(2);
        let a = FunctionMatrix::from_constant_rows(&s, &[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let x = FunctionVector::from_constants(&s, &[1.0, 1.0]).unwrap();
        let y = a.matvec(&x).unwrap();
        assert_eq!(y.entry(0).values(), &[2.0, 2.0]);
        assert_eq!(y.entry(1).values(), &[3.0, 3.0]);
    }

    #[test]
    fn matvec_matches_per_sample_numeric_oracle() {
        let s = uniform_space(5);
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let a = random_spd(&mut rng, &s, 3);
        let x = random_vector(&mut rng, &s, 3);
        let y = a.matvec(&x).unwrap();
        for &sample in s.positive_indices() {
            let am = a.sample_matrix(sample);
            let xv = x.sample_values(sample);
            for i in 0..3 {
                let expect: f64 = (0..3).map(|j| am[i * 3 + j] * xv[j]).sum();
                assert!((y.entry(i).value_at(sample) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn a_inner_symmetry_and_oracle() {
        let s = uniform_space(4);
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let a = random_spd(&mut rng, &s, 3);
        let x = random_vector(&mut rng, &s, 3);
        let y = random_vector(&mut rng, &s, 3);
        let xy = a.a_inner(&x, &y).unwrap();
        let yx = a.a_inner(&y, &x).unwrap();
        assert!(xy
            .ae_equal(
                &yx,
                &ToleranceConfig {
                    tau_zero: 1e-10,
                    relative: true
                }
            )
            .unwrap());

        for &sample in s.positive_indices() {
            let am = a.sample_matrix(sample);
            let xv = x.sample_values(sample);
            let yv = y.sample_values(sample);
            let mut expect = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    expect += xv[i] * am[i * 3 + j] * yv[j];
                }
            }
            assert!((xy.value_at(sample) - expect).abs() < 1e-12);
        }

        // identity matrix reduces to the Euclidean dot product
        let id = FunctionMatrix::identity(&s, 3);
        let dot = id.a_inner(&x, &y).unwrap();
        let plain = x.dot(&y).unwrap();
        assert!(dot.ae_equal(&plain, &TOL).unwrap());
    }

    #[test]
    fn a_norm_zero_vector_is_zero() {
        let s = uniform_space(3);
        let a = FunctionMatrix::identity(&s, 2);
        let z = FunctionVector::zero(&s, 2);
        let norm = a.a_norm(&z, &TOL).unwrap();
        assert!(norm.is_ae_zero(&TOL));
    }

    #[test]
    fn a_norm_pythagoras() {
        let s = uniform_space(2);
        let a = FunctionMatrix::identity(&s, 2);
        let x = FunctionVector::from_constants(&s, &[3.0, 4.0]).unwrap();
        let norm = a.a_norm(&x, &TOL).unwrap();
        let five = AlgebraElement::constant(&s, 5.0).unwrap();
        assert!(norm.ae_equal(&five, &TOL).unwrap());
    }

    #[test]
    fn a_norm_squares_to_inner() {
        let s = uniform_space(4);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let a = random_spd(&mut rng, &s, 3);
        let x = random_vector(&mut rng, &s, 3);
        let norm = a.a_norm(&x, &TOL).unwrap();
        let sq = norm.mul(&norm).unwrap();
        let inner = a.a_inner(&x, &x).unwrap();
        assert!(sq
            .ae_equal(
                &inner,
                &ToleranceConfig {
                    tau_zero: 1e-10,
                    relative: true
                }
            )
            .unwrap());
    }

    #[test]
    fn symmetry_and_definiteness_checks() {
        let s = uniform_space(2);
        let id = FunctionMatrix::identity(&s, 2);
        assert!(id.is_symmetric(&TOL));
        assert!(id.is_positive_definite(&TOL));

        // eigenvalues 3 and -1
        let indefinite =
            FunctionMatrix::from_constant_rows(&s, &[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(indefinite.is_symmetric(&TOL));
        assert!(!indefinite.is_positive_definite(&TOL));

        let asym =
            FunctionMatrix::from_constant_rows(&s, &[vec![1.0, 2.0], vec![0.5, 1.0]]).unwrap();
        assert!(!asym.is_symmetric(&TOL));
        assert!(!asym.is_positive_definite(&TOL));
    }

    #[test]
    fn positive_definiteness_matches_quadratic_form_sampling() {
        // pointwise eigenvalue test vs brute-force y^T A y > 0 over random
        // unit vectors
        let s = uniform_space(3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(19);
        for n in 2..=4 {
            let spd = random_spd(&mut rng, &s, n);
            assert!(spd.is_positive_definite(&TOL));
            for &sample in s.positive_indices() {
                let am = spd.sample_matrix(sample);
                for _ in 0..1000 {
                    let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm < 1e-6 {
                        continue;
                    }
                    y.iter_mut().for_each(|v| *v /= norm);
                    let mut quad = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            quad += y[i] * am[i * n + j] * y[j];
                        }
                    }
                    assert!(quad > 0.0, "n={n} sample={sample} quad={quad}");
                }
            }
        }
    }

    #[test]
    fn eigen_diagonal_constant_matrix() {
        let s = uniform_space(3);
        let a = FunctionMatrix::from_constant_rows(
            &s,
            &[
                vec![3.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 2.0],
            ],
        )
        .unwrap();
        let spec = a.eigen_functions(&TOL).unwrap();
        assert_eq!(spec.lambdas[0].values(), &[1.0, 1.0, 1.0]);
        assert_eq!(spec.lambdas[1].values(), &[2.0, 2.0, 2.0]);
        assert_eq!(spec.lambdas[2].values(), &[3.0, 3.0, 3.0]);
        assert_eq!(spec.lambda_under, 1.0);
        assert_eq!(spec.lambda_over, 3.0);
    }

    #[test]
    fn eigen_identity_has_unit_kappa() {
        let s = uniform_space(4);
        let a = FunctionMatrix::identity(&s, 3);
        let spec = a.eigen_functions(&TOL).unwrap();
        assert_eq!(spec.kappa, 1.0);
        for l in &spec.lambdas {
            assert!(l.ae_equal(&AlgebraElement::one(&s), &TOL).unwrap());
        }
    }

    #[test]
    fn eigen_two_by_two_matches_closed_form() {
        let m = 6;
        let s = uniform_space(m);
        let mut rng = rand::rngs::StdRng::seed_from_u64(23);
        let a = random_spd(&mut rng, &s, 2);
        let spec = a.eigen_functions(&TOL).unwrap();
        for &sample in s.positive_indices() {
            let mat = a.sample_matrix(sample);
            let tr = mat[0] + mat[3];
            let det = mat[0] * mat[3] - mat[1] * mat[2];
            let disc = (tr * tr - 4.0 * det).sqrt();
            let lo = (tr - disc) / 2.0;
            let hi = (tr + disc) / 2.0;
            assert!((spec.lambdas[0].value_at(sample) - lo).abs() < 1e-10);
            assert!((spec.lambdas[1].value_at(sample) - hi).abs() < 1e-10);
        }
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let s = uniform_space(2);
        let a = FunctionMatrix::from_constant_rows(&s, &[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(a.eigen_functions(&TOL), Err(Error::NotSymmetric)));
    }

    #[test]
    fn eigen_basis_is_pointwise_orthonormal_with_small_residual() {
        let s = uniform_space(5);
        let mut rng = rand::rngs::StdRng::seed_from_u64(31);
        let a = random_spd(&mut rng, &s, 4);
        let spec = a.eigen_functions(&TOL).unwrap();
        let n = 4;
        for &sample in s.positive_indices() {
            let am = a.sample_matrix(sample);
            for j in 0..n {
                let yj = spec.eigvecs[j].sample_values(sample);
                for k in 0..n {
                    let yk = spec.eigvecs[k].sample_values(sample);
                    let dot: f64 = yj.iter().zip(&yk).map(|(a, b)| a * b).sum();
                    let expect = if j == k { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-10);
                }
                let lambda = spec.lambdas[j].value_at(sample);
                for i in 0..n {
                    let ay: f64 = (0..n).map(|k| am[i * n + k] * yj[k]).sum();
                    assert!((ay - lambda * yj[i]).abs() < 1e-10 * lambda.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn decompose_identity_keeps_standard_basis() {
        let s = uniform_space(2);
        let b = FunctionMatrix::identity(&s, 3);
        let d = b.orthogonal_decompose(&TOL).unwrap();
        assert_eq!(d.ortho_basis.len(), 3);
        assert!(d.radical_basis.is_empty());
        for g in &d.gram_diagonal {
            assert!(g.ae_equal(&AlgebraElement::one(&s), &TOL).unwrap());
        }
    }

    #[test]
    fn decompose_zero_form_is_all_radical() {
        let s = uniform_space(2);
        let zero =
            FunctionMatrix::from_constant_rows(&s, &[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let d = zero.orthogonal_decompose(&TOL).unwrap();
        assert!(d.ortho_basis.is_empty());
        assert_eq!(d.radical_basis.len(), 2);
    }

    #[test]
    fn decompose_constant_spd_matches_hand_gram_schmidt() {
        let s = uniform_space(2);
        let b = FunctionMatrix::from_constant_rows(&s, &[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let d = b.orthogonal_decompose(&TOL).unwrap();
        assert_eq!(d.ortho_basis.len(), 2);
        assert!(d.radical_basis.is_empty());

        // hand Gram-Schmidt: pivot e1 (b(e1,e1)=4 > 3), then
        // e2 - (1/4) e1 with self-pairing 11/4
        let four = AlgebraElement::constant(&s, 4.0).unwrap();
        assert!(d.gram_diagonal[0].ae_equal(&four, &TOL).unwrap());
        let expected_second = AlgebraElement::constant(&s, 11.0 / 4.0).unwrap();
        assert!(d.gram_diagonal[1].ae_equal(&expected_second, &TOL).unwrap());
        let x2 = &d.ortho_basis[1];
        assert!((x2.entry(0).value_at(0) - (-0.25)).abs() < 1e-12);
        assert!((x2.entry(1).value_at(0) - 1.0).abs() < 1e-12);

        // cross pairing vanishes
        let cross = b.a_inner(&d.ortho_basis[0], &d.ortho_basis[1]).unwrap();
        assert!(cross.is_ae_zero(&TOL));
    }

    #[test]
    fn poly_bound_check_trivial_polynomials() {
        let s = uniform_space(3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(41);
        let a = random_spd(&mut rng, &s, 3);
        let x = random_vector(&mut rng, &s, 3);

        // constant polynomial 1: q(A)x = x and the envelope is exactly 1
        let one = crate::bounds::AlgebraPolynomial::new(vec![AlgebraElement::one(&s)]).unwrap();
        let (lhs, envelope) = poly_apply_bound_check(&one, &a, &x, 257, &TOL).unwrap();
        assert_eq!(envelope, 1.0);
        let x_norm = a.a_norm_pointwise(&x).unwrap();
        assert!(lhs.ae_equal(&x_norm, &TOL).unwrap());

        // q = T against c * identity: the norm scales by c and the envelope is c
        let c = 3.5;
        let scaled_id = FunctionMatrix::from_constant_rows(
            &s,
            &[vec![c, 0.0, 0.0], vec![0.0, c, 0.0], vec![0.0, 0.0, c]],
        )
        .unwrap();
        let t_poly = crate::bounds::AlgebraPolynomial::new(vec![
            AlgebraElement::zero(&s),
            AlgebraElement::one(&s),
        ])
        .unwrap();
        let (lhs, envelope) = poly_apply_bound_check(&t_poly, &scaled_id, &x, 257, &TOL).unwrap();
        assert!((envelope - c).abs() < 1e-12);
        let expect = scaled_id
            .a_norm_pointwise(&x)
            .unwrap()
            .scalar_mul(c)
            .unwrap();
        let loose = ToleranceConfig {
            tau_zero: 1e-10,
            relative: true,
        };
        assert!(lhs.ae_equal(&expect, &loose).unwrap());
    }

    #[test]
    fn schwartz_and_triangle_hold_pointwise() {
        let s = uniform_space(4);
        let mut rng = rand::rngs::StdRng::seed_from_u64(43);
        for _ in 0..50 {
            let a = random_spd(&mut rng, &s, 3);
            let x = random_vector(&mut rng, &s, 3);
            let y = random_vector(&mut rng, &s, 3);
            let inner = a.a_inner(&x, &y).unwrap();
            let nx = a.a_norm(&x, &TOL).unwrap();
            let ny = a.a_norm(&y, &TOL).unwrap();
            let nsum = a.a_norm_pointwise(&x.add(&y).unwrap()).unwrap();
            for &smp in s.positive_indices() {
                let rhs = nx.value_at(smp) * ny.value_at(smp);
                assert!(inner.value_at(smp).abs() <= rhs + 1e-10 * rhs.max(1.0));
                let tri = nx.value_at(smp) + ny.value_at(smp);
                assert!(nsum.value_at(smp) <= tri + 1e-10 * tri.max(1.0));
            }
        }
    }

    #[test]
    fn decompose_reassembles_bilinear_form() {
        let s = uniform_space(3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(37);
        let b = random_spd(&mut rng, &s, 3);
        let d = b.orthogonal_decompose(&TOL).unwrap();
        assert_eq!(d.ortho_basis.len(), 3);

        // u = sum c_i x_i, v = sum e_i x_i with random constant coefficients
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let e: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut u = FunctionVector::zero(&s, 3);
        let mut v = FunctionVector::zero(&s, 3);
        for i in 0..3 {
            u = u
                .add(&d.ortho_basis[i].scale_scalar(c[i]).unwrap())
                .unwrap();
            v = v
                .add(&d.ortho_basis[i].scale_scalar(e[i]).unwrap())
                .unwrap();
        }
        let direct = b.a_inner(&u, &v).unwrap();
        let mut gram = AlgebraElement::zero(&s);
        for i in 0..3 {
            gram = gram
                .add(&d.gram_diagonal[i].scalar_mul(c[i] * e[i]).unwrap())
                .unwrap();
        }
        assert!(direct
            .ae_equal(
                &gram,
                &ToleranceConfig {
                    tau_zero: 1e-10,
                    relative: true
                }
            )
            .unwrap());
    }
}
