//! Small dense linear algebra over [`Real`]: symmetric matrices, the
//! symmetric eigenproblem, Cholesky factors, and triangular solves.
//!
//! The full eigensolver is Householder tridiagonalization followed by the
//! implicit QL iteration (the EISPACK `tred2`/`tql2` pair).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense `n × n` symmetric matrix, stored in full row-major form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SymmetricMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// Builds from the upper triangle of a row-major `n × n` buffer,
    /// mirroring it so the result is exactly symmetric.
    pub fn from_upper(n: usize, data: &[T]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        let mut m = Self { n, data: data.to_vec() };
        for i in 0..n {
            for j in 0..i {
                m.data[i * n + j] = m.data[j * n + i];
            }
        }
        Ok(m)
    }

    /// Rejects buffers that are not exactly symmetric.
    pub fn from_row_major(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::InvalidParameter(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    /// Sets `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn scale(&mut self, s: T) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `vᵀ M v`.
    pub fn quadratic_form(&self, v: &[T]) -> T {
        self.mul_vec(v).iter().zip(v).map(|(&a, &b)| a * b).sum()
    }

    /// Leading `k × k` principal block.
    pub fn leading_block(&self, k: usize) -> Self {
        let mut m = Self::zeros(k);
        for i in 0..k {
            m.data[i * k..(i + 1) * k].copy_from_slice(&self.data[i * self.n..i * self.n + k]);
        }
        m
    }

    /// Principal submatrix on the given indices (0-based).
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut m = Self::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m.data[a * k + b] = self.get(i, j);
            }
        }
        m
    }
}

/// Full spectrum of a symmetric matrix: eigenvalues ascending, eigenvectors
/// stored as columns of a row-major `n × n` buffer.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    vectors: Vec<T>,
    n: usize,
}

impl<T: Real> SymmetricEigen<T> {
    pub fn vector(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self.vectors[i * self.n + j]).collect()
    }
}

pub fn symmetric_eigen<T: Real>(m: &SymmetricMatrix<T>) -> Result<SymmetricEigen<T>> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = m.n;
    let mut v = m.data.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    if n == 0 {
        return Ok(SymmetricEigen {
            values: d,
            vectors: v,
            n,
        });
    }
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e)?;
    Ok(SymmetricEigen {
        values: d,
        vectors: v,
        n,
    })
}

// Householder reduction to tridiagonal form. On exit `d` holds the
// diagonal, `e[1..]` the subdiagonal, and `v` the accumulated transform.
fn tred2<T: Real>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for &dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = T::zero();
                v[at(j, i)] = T::zero();
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in &mut e[..i] {
                *ej = T::zero();
            }
            for j in 0..i {
                let f = d[j];
                v[at(j, i)] = f;
                let mut g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    let dk = d[k];
                    v[at(k, j)] -= g * dk;
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = T::zero();
    }
    v[at(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

// Implicit QL on the tridiagonal form, then sort ascending.
fn tql2<T: Real>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) -> Result<()> {
    let at = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 * n.max(1) {
                    return Err(Error::InvalidParameter("QL iteration did not converge".into()));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (T::lit(2.0) * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[l + 2..n] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let hk = v[at(k, i + 1)];
                        v[at(k, i + 1)] = s * v[at(k, i)] + c * hk;
                        v[at(k, i)] = c * v[at(k, i)] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    // selection sort, swapping eigenvector columns alongside
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d.swap(i, k);
            for row in 0..n {
                v.swap(at(row, i), at(row, k));
            }
        }
    }
    Ok(())
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`, row-major.
pub fn cholesky<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: a.len(),
        });
    }
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular row-major `L`.
pub fn solve_lower<T: Real>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[i * n + k] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular row-major `L`.
pub fn solve_lower_transpose<T: Real>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// `L x` for lower-triangular row-major `L`.
pub fn mul_lower<T: Real>(l: &[T], n: usize, x: &[T]) -> Vec<T> {
    (0..n)
        .map(|i| (0..=i).fold(T::zero(), |acc, k| acc + l[i * n + k] * x[k]))
        .collect()
}

/// `Lᵀ x` for lower-triangular row-major `L`.
pub fn mul_lower_transpose<T: Real>(l: &[T], n: usize, x: &[T]) -> Vec<T> {
    (0..n)
        .map(|i| (i..n).fold(T::zero(), |acc, k| acc + l[k * n + i] * x[k]))
        .collect()
}

/// Smallest eigenpair by inverse iteration on `M - σI` with `σ < λ_min`,
/// so the shifted matrix is positive definite and factors by Cholesky.
/// Returns `None` when the iteration does not reach `tol` (relative residual).
pub fn inverse_iteration<T: Real>(m: &SymmetricMatrix<T>, tol: T, max_iter: usize) -> Option<(T, Vec<T>)> {
    let n = m.n();
    let norm = m.frobenius_norm();
    if n == 0 || norm == T::zero() {
        return None;
    }
    // Gershgorin lower bound keeps the shift below the spectrum.
    let gersh = (0..n)
        .map(|i| {
            let off: T = (0..n).filter(|&j| j != i).map(|j| m.get(i, j).abs()).sum();
            m.get(i, i) - off
        })
        .fold(T::infinity(), T::min);
    let mut shift = T::zero().min(gersh) - T::lit(1e-8) * norm;
    let mut chol = None;
    for _ in 0..8 {
        let mut a = m.as_slice().to_vec();
        for i in 0..n {
            a[i * n + i] -= shift;
        }
        match cholesky(&a, n) {
            Ok(l) => {
                chol = Some(l);
                break;
            }
            Err(_) => shift -= T::lit(1e-6) * norm,
        }
    }
    let l = chol?;
    let mut x: Vec<T> = (0..n)
        .map(|i| T::one() + T::lit(0.01) * T::from_usize_lossy(i % 7))
        .collect();
    let nx = x.iter().map(|&v| v * v).sum::<T>().sqrt();
    x.iter_mut().for_each(|v| *v /= nx);
    for _ in 0..max_iter {
        let y = solve_lower_transpose(&l, n, &solve_lower(&l, n, &x));
        let ny = y.iter().map(|&v| v * v).sum::<T>().sqrt();
        if !ny.is_finite() || ny == T::zero() {
            return None;
        }
        x = y.into_iter().map(|v| v / ny).collect();
        let mx = m.mul_vec(&x);
        let lambda: T = mx.iter().zip(&x).map(|(&a, &b)| a * b).sum();
        let res = mx
            .iter()
            .zip(&x)
            .map(|(&a, &b)| (a - lambda * b) * (a - lambda * b))
            .sum::<T>()
            .sqrt();
        if res <= tol * norm {
            return Some((lambda, x));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn residual(m: &SymmetricMatrix<f64>, lambda: f64, v: &[f64]) -> f64 {
        let mv = m.mul_vec(v);
        mv.iter()
            .zip(v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn diagonal_spectrum_sorted() {
        let m = SymmetricMatrix::<f64>::from_diagonal(&[3.0, 1.0, 2.0]);
        let eig = symmetric_eigen(&m).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);
        let v = eig.vector(0);
        assert_relative_eq!(v[1].abs(), 1.0);
    }

    #[test]
    fn known_tridiagonal() {
        // [[2,-1,0],[-1,2,-1],[0,-1,2]] has eigenvalues 2 - √2, 2, 2 + √2
        let m = SymmetricMatrix::from_row_major(3, vec![2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]).unwrap();
        let eig = symmetric_eigen(&m).unwrap();
        let r2 = 2f64.sqrt();
        assert_relative_eq!(eig.values[0], 2.0 - r2, epsilon = 1e-14);
        assert_relative_eq!(eig.values[1], 2.0, epsilon = 1e-14);
        assert_relative_eq!(eig.values[2], 2.0 + r2, epsilon = 1e-14);
        for j in 0..3 {
            assert!(residual(&m, eig.values[j], &eig.vector(j)) < 1e-13);
        }
    }

    #[test]
    fn one_by_one_and_empty() {
        let m = SymmetricMatrix::from_diagonal(&[4.5]);
        let eig = symmetric_eigen(&m).unwrap();
        assert_eq!(eig.values, vec![4.5]);
        assert_eq!(eig.vector(0), vec![1.0]);
        assert!(symmetric_eigen(&SymmetricMatrix::<f64>::zeros(0))
            .unwrap()
            .values
            .is_empty());
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = SymmetricMatrix::<f64>::identity(2);
        m.set(0, 1, f64::NAN);
        assert_eq!(symmetric_eigen(&m).unwrap_err(), Error::NonFinite);
    }

    #[test]
    fn cholesky_roundtrip() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let l = cholesky(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert_relative_eq!(s, a[i * 3 + j], epsilon = 1e-14);
            }
        }
        let b = [1.0, -2.0, 0.5];
        let x = solve_lower(&l, 3, &b);
        assert_eq!(
            mul_lower(&l, 3, &x)
                .iter()
                .map(|v| (v * 1e12).round())
                .collect::<Vec<_>>(),
            b.iter().map(|v| (v * 1e12).round()).collect::<Vec<_>>()
        );
        let y = solve_lower_transpose(&l, 3, &b);
        let back = mul_lower_transpose(&l, 3, &y);
        for (u, v) in back.iter().zip(&b) {
            assert_relative_eq!(u, v, epsilon = 1e-14);
        }
        assert_eq!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn inverse_iteration_finds_smallest() {
        let m = SymmetricMatrix::from_row_major(3, vec![2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]).unwrap();
        let (lambda, v) = inverse_iteration(&m, 1e-12, 500).unwrap();
        assert_relative_eq!(lambda, 2.0 - 2f64.sqrt(), epsilon = 1e-12);
        assert!(residual(&m, lambda, &v) < 1e-11);
        // singular PSD matrix: zero is the smallest eigenvalue
        let s = SymmetricMatrix::<f64>::from_row_major(2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let (lambda, _) = inverse_iteration(&s, 1e-12, 500).unwrap();
        assert!(lambda.abs() < 1e-10);
    }
}
