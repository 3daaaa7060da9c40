//! Cyclic Jacobi eigendecomposition for small dense symmetric matrices.
//!
//! This is the per-sample kernel behind the function-valued spectral
//! routines. It is deliberately self-contained: plain `f64` storage, cyclic
//! sweeps over the upper triangle, and a canonical output order so repeated
//! runs are bit-identical.
//!
//! Convergence: the off-diagonal Frobenius norm must drop below
//! `1e-14` times the Frobenius norm of the input, within at most 50 sweeps.

const REL_OFF_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 50;

/// Eigenvalues (ascending) and matching eigenvectors (columns of `vectors`,
/// row-major `n x n`) of a symmetric matrix.
#[derive(Debug, Clone)]
pub(crate) struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    /// Column `j` as a vector of length `n`.
    #[cfg(test)]
    pub fn vector(&self, n: usize, j: usize) -> Vec<f64> {
        (0..n).map(|i| self.vectors[i * n + j]).collect()
    }
}

fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn off_diagonal_frobenius(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[p * n + q] * a[p * n + q];
            }
        }
    }
    s.sqrt()
}

/// Diagonalizes a symmetric matrix given in row-major order. Only the upper
/// triangle is read, so tiny asymmetries below the caller's tolerance cannot
/// perturb the result. Returns `None` when sweeps run out.
pub(crate) fn symmetric_eigen(matrix: &[f64], n: usize) -> Option<SymmetricEigen> {
    assert_eq!(matrix.len(), n * n);
    if n == 0 {
        return Some(SymmetricEigen {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }

    // Work on a symmetrized copy built from the upper triangle.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            a[i * n + j] = matrix[i * n + j];
            a[j * n + i] = matrix[i * n + j];
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let scale = frobenius(&a);
    if scale == 0.0 || n == 1 {
        return Some(finish(a, v, n));
    }
    let target = REL_OFF_TOL * scale;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_frobenius(&a, n) <= target {
            return Some(finish(a, v, n));
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                // Rotation that annihilates a[p][q].
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    if off_diagonal_frobenius(&a, n) <= target {
        return Some(finish(a, v, n));
    }
    None
}

/// Sorts eigenpairs ascending and applies the sign convention: each
/// eigenvector's largest-magnitude component is made positive, ties broken
/// by the lowest index.
fn finish(a: Vec<f64>, v: Vec<f64>, n: usize) -> SymmetricEigen {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[i * n + i]
            .partial_cmp(&a[j * n + j])
            .expect("eigenvalues are finite")
            .then(i.cmp(&j))
    });

    let mut values = Vec::with_capacity(n);
    let mut vectors = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        values.push(a[src * n + src]);
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..n {
            let mag = v[i * n + src].abs();
            if mag > best_abs {
                best_abs = mag;
                best = i;
            }
        }
        let flip = if v[best * n + src] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[i * n + dst] = flip * v[i * n + src];
        }
    }
    SymmetricEigen { values, vectors }
}
