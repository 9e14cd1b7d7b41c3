//! First and second moments of a fitted density without sampling.
//!
//! With `X_ij = ∫ z φ_i φ_j` and `Y_ij = ∫ z² φ_i φ_j` per dimension, every
//! moment is a quadratic form in `α`: e.g. `E[z_d] = ⟨α, X^{(d)} ×_d α⟩`,
//! where `×_d` applies a matrix along tensor axis `d`. For the Hermite family
//! `X` and `Y` are banded and exact; other families fall back to 1-D
//! Gauss–Legendre quadrature of the same integrals.

use crate::basis1d::{BasisFamily, BasisKind};
use crate::density::cdf::CdfGrid;
use crate::density::OfeDensity;
use crate::error::Result;
use crate::linalg::SymmetricMatrix;
use crate::quadrature::GaussLegendre;
use crate::scalar::{dot, Real};

/// Mean and row-major covariance in original coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments<T> {
    pub mean: Vec<T>,
    pub covariance: Vec<T>,
}

/// `∫ z φ_i φ_j` for the weighted Hermite functions.
pub fn hermite_mu<T: Real>(order: usize) -> SymmetricMatrix<T> {
    let mut m = SymmetricMatrix::zeros(order);
    // z φ_k = √k φ_{k+1} + √(k−1) φ_{k−1}, 1-based
    for i in 1..order {
        m.set(i - 1, i, T::from_usize_lossy(i).sqrt());
    }
    m
}

/// `∫ z² φ_i φ_j` for the weighted Hermite functions.
pub fn hermite_nu<T: Real>(order: usize) -> SymmetricMatrix<T> {
    let mut m = SymmetricMatrix::zeros(order);
    for i in 1..=order {
        m.set(i - 1, i - 1, T::from_usize_lossy(2 * i - 1));
        if i + 2 <= order {
            m.set(i - 1, i + 1, T::from_usize_lossy(i * (i + 1)).sqrt());
        }
    }
    m
}

/// `(∫ z φ_i φ_j, ∫ z² φ_i φ_j)` by composite quadrature over the support
/// (the Laguerre half-line is truncated at the sampler grid's upper end).
pub fn numeric_mu_nu<T: Real>(family: BasisFamily, order: usize) -> (SymmetricMatrix<T>, SymmetricMatrix<T>) {
    let (lo, hi, panels) = match family.kind {
        BasisKind::HermiteWeighted => (-40.0, 40.0, 400),
        BasisKind::Legendre => (-1.0, 1.0, 8 + order),
        BasisKind::Fourier => (0.0, std::f64::consts::TAU, 16 + 2 * order),
        BasisKind::LaguerreWeighted => {
            let hi = CdfGrid::default_for(family, order).hi;
            (0.0, hi, (hi as usize).max(64))
        }
    };
    let rule = GaussLegendre::new(16);
    let (xs, ws) = rule.composite::<T>(T::lit(lo), T::lit(hi), panels);
    let mut mu = SymmetricMatrix::zeros(order);
    let mut nu = SymmetricMatrix::zeros(order);
    let mut phi = vec![T::zero(); order];
    for (&x, &w) in xs.iter().zip(&ws) {
        family.fill_values(x, &mut phi);
        for i in 0..order {
            let a = w * x * phi[i];
            for j in i..order {
                let v = a * phi[j];
                mu.set(i, j, mu.get(i, j) + v);
                nu.set(i, j, nu.get(i, j) + v * x);
            }
        }
    }
    (mu, nu)
}

fn moment_matrices<T: Real>(family: BasisFamily, order: usize) -> (SymmetricMatrix<T>, SymmetricMatrix<T>) {
    match family.kind {
        BasisKind::HermiteWeighted => (hermite_mu(order), hermite_nu(order)),
        _ => numeric_mu_nu(family, order),
    }
}

/// Applies the symmetric `m` along axis `axis` of the tensor `t` with the given shape.
fn apply_axis<T: Real>(t: &[T], shape: &[usize], axis: usize, m: &SymmetricMatrix<T>) -> Vec<T> {
    let kd = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer = t.len() / (kd * inner);
    let mut out = vec![T::zero(); t.len()];
    for o in 0..outer {
        let base = o * kd * inner;
        for i in 0..kd {
            let dst = base + i * inner;
            for j in 0..kd {
                let c = m.get(i, j);
                if c == T::zero() {
                    continue;
                }
                let src = base + j * inner;
                for r in 0..inner {
                    out[dst + r] += c * t[src + r];
                }
            }
        }
    }
    out
}

impl<T: Real> OfeDensity<T> {
    /// Mean and covariance of the standardized-coordinate density.
    pub fn standardized_moments(&self) -> Result<Moments<T>> {
        let basis = self.basis();
        let shape = basis.orders();
        let d = basis.dim();
        let alpha = self.alpha().as_slice();
        let mats: Vec<_> = (0..d)
            .map(|k| moment_matrices::<T>(basis.family(k), shape[k]))
            .collect();
        let first: Vec<Vec<T>> = (0..d).map(|k| apply_axis(alpha, shape, k, &mats[k].0)).collect();
        let mean: Vec<T> = first.iter().map(|f| dot(alpha, f)).collect();
        let mut cov = vec![T::zero(); d * d];
        for a in 0..d {
            let second = dot(alpha, &apply_axis(alpha, shape, a, &mats[a].1));
            cov[a * d + a] = second - mean[a] * mean[a];
            for b in a + 1..d {
                let cross = dot(alpha, &apply_axis(&first[a], shape, b, &mats[b].0));
                let c = cross - mean[a] * mean[b];
                cov[a * d + b] = c;
                cov[b * d + a] = c;
            }
        }
        Ok(Moments { mean, covariance: cov })
    }

    /// Mean and covariance in original coordinates: `L m̃ + μ` and `L C̃ Lᵀ`.
    pub fn moments(&self) -> Result<Moments<T>> {
        let m = self.standardized_moments()?;
        let Some(t) = self.transform() else {
            return Ok(m);
        };
        let d = self.dim();
        let l = t.cholesky_factor();
        let mean = t.from_standard(&m.mean);
        // L C̃
        let mut lc = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                lc[i * d + j] = (0..=i).map(|k| l[i * d + k] * m.covariance[k * d + j]).sum();
            }
        }
        let mut cov = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] = (0..=j).map(|k| lc[i * d + k] * l[j * d + k]).sum();
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                let s = (cov[i * d + j] + cov[j * d + i]) * T::lit(0.5);
                cov[i * d + j] = s;
                cov[j * d + i] = s;
            }
        }
        Ok(Moments { mean, covariance: cov })
    }

    pub fn mean(&self) -> Result<Vec<T>> {
        Ok(self.moments()?.mean)
    }

    pub fn covariance(&self) -> Result<Vec<T>> {
        Ok(self.moments()?.covariance)
    }
}
