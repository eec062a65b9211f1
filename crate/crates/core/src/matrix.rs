//! Dense symmetric interaction matrix.

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Relative tolerance used when certifying positive semi-definiteness.
pub const PSD_RELATIVE_TOLERANCE: f64 = 1e-9;

const MAX_JACOBI_SWEEPS: usize = 100;

/// Symmetric `k x k` matrix stored row-major. Pulling arm `i` adds row `i`
/// to the loss vector.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix<T> {
    k: usize,
    entries: Vec<T>,
    psd_certified: bool,
}

impl<T: Scalar> InteractionMatrix<T> {
    /// Builds a matrix from row-major entries, rejecting anything that is not
    /// exactly symmetric.
    pub fn new(k: usize, entries: Vec<T>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("arm count must be positive".into()));
        }
        if entries.len() != k * k {
            return Err(Error::DimensionMismatch {
                expected: k * k,
                got: entries.len(),
            });
        }
        for i in 0..k {
            for j in (i + 1)..k {
                if entries[i * k + j] != entries[j * k + i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self {
            k,
            entries,
            psd_certified: false,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let k = rows.len();
        let mut entries = Vec::with_capacity(k * k);
        for row in rows {
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(k, entries)
    }

    /// Builds `(M + M^T) / 2` from arbitrary row-major entries.
    pub fn symmetrized(k: usize, entries: &[T]) -> Result<Self> {
        if entries.len() != k * k {
            return Err(Error::DimensionMismatch {
                expected: k * k,
                got: entries.len(),
            });
        }
        let mut sym = entries.to_vec();
        for i in 0..k {
            for j in (i + 1)..k {
                let avg = (entries[i * k + j] + entries[j * k + i]) * T::half();
                sym[i * k + j] = avg;
                sym[j * k + i] = avg;
            }
        }
        Self::new(k, sym)
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            entries: vec![T::zero(); k * k],
            psd_certified: true,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.k..(i + 1) * self.k]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.k).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.k).map(|i| self.get(i, i)).collect()
    }

    pub fn is_psd_certified(&self) -> bool {
        self.psd_certified
    }

    /// `max_ij |A_ij|`.
    pub fn max_abs_norm(&self) -> T {
        self.entries
            .iter()
            .map(|v| v.abs())
            .fold(T::zero(), |m, v| if v > m { v } else { m })
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.k);
        (0..self.k)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        dot(x, &self.mul_vec(x))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> InteractionMatrix<U> {
        InteractionMatrix {
            k: self.k,
            entries: self.entries.iter().map(|&v| f(v)).collect(),
            psd_certified: self.psd_certified,
        }
    }
}

impl<T: Real> InteractionMatrix<T> {
    /// Scale-relative eigenvalue tolerance `1e-9 * max_abs_norm`.
    pub fn psd_tolerance(&self) -> T {
        T::lit(PSD_RELATIVE_TOLERANCE) * self.max_abs_norm()
    }

    /// All eigenvalues in ascending order, by cyclic Jacobi rotations.
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut values = jacobi_eigenvalues(self.k, self.entries.clone());
        values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        values
    }

    /// Eigenvalues in ascending order and the matching eigenvectors as the
    /// columns of a row-major `k x k` matrix.
    pub fn eigen_decomposition(&self) -> (Vec<T>, Vec<T>) {
        let n = self.k;
        let mut v = vec![T::zero(); n * n];
        for i in 0..n {
            v[i * n + i] = T::one();
        }
        let values = jacobi(n, self.entries.clone(), Some(&mut v));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(std::cmp::Ordering::Equal));
        let sorted_values = order.iter().map(|&i| values[i]).collect();
        let mut sorted_vectors = vec![T::zero(); n * n];
        for (col, &src) in order.iter().enumerate() {
            for r in 0..n {
                sorted_vectors[r * n + col] = v[r * n + src];
            }
        }
        (sorted_values, sorted_vectors)
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }

    /// Marks the matrix PSD if every eigenvalue is at least `-psd_tolerance`.
    pub fn certify_psd(mut self) -> Result<Self> {
        if self.entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("interaction matrix"));
        }
        let min = self.min_eigenvalue();
        if min < -self.psd_tolerance() {
            return Err(Error::NotPsd {
                min_eigenvalue: min.to_f64_lossy(),
            });
        }
        self.psd_certified = true;
        Ok(self)
    }

    /// Certifies when possible, otherwise returns the matrix unchanged.
    pub fn with_psd_check(self) -> Self {
        let fallback = self.clone();
        self.certify_psd().unwrap_or(fallback)
    }

    pub fn frobenius_norm(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, &v| acc + v * v)
            .sqrt()
    }

    /// Largest absolute eigenvalue; the operator 2-norm of a symmetric matrix.
    pub fn spectral_norm(&self) -> T {
        self.eigenvalues()
            .into_iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Cyclic Jacobi on a dense symmetric matrix; returns the diagonal after
/// the off-diagonal mass has been driven to rounding level.
fn jacobi_eigenvalues<T: Real>(n: usize, a: Vec<T>) -> Vec<T> {
    jacobi(n, a, None)
}

/// Diagonalizes `a` in place; when `vectors` is given (initially the
/// identity) it accumulates the rotations, so its columns are eigenvectors.
fn jacobi<T: Real>(n: usize, mut a: Vec<T>, mut vectors: Option<&mut Vec<T>>) -> Vec<T> {
    let idx = |i: usize, j: usize| i * n + j;
    let total: T = a.iter().fold(T::zero(), |acc, &v| acc + v * v);
    let threshold = total * T::epsilon() * T::epsilon();

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[idx(p, q)] * a[idx(p, q)];
            }
        }
        if off <= threshold || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let two = T::one() + T::one();
                let theta = (a[idx(q, q)] - a[idx(p, p)]) / (two * apq);
                let t = if theta == T::zero() {
                    T::one()
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a[idx(r, p)];
                    let arq = a[idx(r, q)];
                    a[idx(r, p)] = c * arp - s * arq;
                    a[idx(r, q)] = s * arp + c * arq;
                }
                if let Some(v) = vectors.as_deref_mut() {
                    for r in 0..n {
                        let vrp = v[idx(r, p)];
                        let vrq = v[idx(r, q)];
                        v[idx(r, p)] = c * vrp - s * vrq;
                        v[idx(r, q)] = s * vrp + c * vrq;
                    }
                }
                for r in 0..n {
                    let apr = a[idx(p, r)];
                    let aqr = a[idx(q, r)];
                    a[idx(p, r)] = c * apr - s * aqr;
                    a[idx(q, r)] = s * apr + c * aqr;
                }
                a[idx(p, q)] = T::zero();
                a[idx(q, p)] = T::zero();
            }
        }
    }
    (0..n).map(|i| a[idx(i, i)]).collect()
}
