//! Proposal distributions for the importance-sampled divergence estimator.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default half-width of the uniform proposal in standardized coordinates.
pub const DEFAULT_BOX_HALF_WIDTH: f64 = 6.0;
/// Variance of the Gaussian proposal offered for heavy-tailed targets.
pub const DEFAULT_GAUSSIAN_VARIANCE: f64 = 9.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Proposal<T> {
    UniformBox { lo: Vec<T>, hi: Vec<T> },
    IsotropicGaussian { mean: Vec<T>, variance: T },
}

impl<T: Real> Proposal<T> {
    pub fn uniform_box(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::Empty("proposal dimensions"));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(&l, &h)| !(l < h) || !l.is_finite() || !h.is_finite())
        {
            return Err(Error::InvalidParameter("uniform box needs finite lo < hi".into()));
        }
        Ok(Proposal::UniformBox { lo, hi })
    }

    /// `[-half_width, half_width]^dim`.
    pub fn centered_box(dim: usize, half_width: T) -> Result<Self> {
        Self::uniform_box(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn isotropic_gaussian(mean: Vec<T>, variance: T) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::Empty("proposal dimensions"));
        }
        if !(variance > T::zero()) || !variance.is_finite() {
            return Err(Error::InvalidParameter(
                "Gaussian proposal variance must be positive".into(),
            ));
        }
        Ok(Proposal::IsotropicGaussian { mean, variance })
    }

    /// Re-validates after deserialization.
    pub fn validated(self) -> Result<Self> {
        match self {
            Proposal::UniformBox { lo, hi } => Self::uniform_box(lo, hi),
            Proposal::IsotropicGaussian { mean, variance } => Self::isotropic_gaussian(mean, variance),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Proposal::UniformBox { lo, .. } => lo.len(),
            Proposal::IsotropicGaussian { mean, .. } => mean.len(),
        }
    }

    pub fn density(&self, z: &[T]) -> Result<T> {
        self.check_dim(z)?;
        Ok(self.density_unchecked(z))
    }

    pub fn log_density(&self, z: &[T]) -> Result<T> {
        self.check_dim(z)?;
        Ok(match self {
            Proposal::UniformBox { .. } => self.density_unchecked(z).ln(),
            Proposal::IsotropicGaussian { mean, variance } => gaussian_log_density(z, mean, *variance),
        })
    }

    pub(crate) fn density_unchecked(&self, z: &[T]) -> T {
        match self {
            Proposal::UniformBox { lo, hi } => {
                let mut vol = T::one();
                for ((&zd, &l), &h) in z.iter().zip(lo).zip(hi) {
                    if zd < l || zd > h {
                        return T::zero();
                    }
                    vol *= h - l;
                }
                vol.recip()
            }
            Proposal::IsotropicGaussian { mean, variance } => gaussian_log_density(z, mean, *variance).exp(),
        }
    }

    /// `n` i.i.d. draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Vec<T>> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        match self {
            Proposal::UniformBox { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(&l, &h)| {
                    let u: f64 = rng.random();
                    l + (h - l) * T::lit(u)
                })
                .collect(),
            Proposal::IsotropicGaussian { mean, variance } => {
                let sd = variance.sqrt();
                mean.iter()
                    .map(|&m| {
                        let e: f64 = StandardNormal.sample(rng);
                        m + sd * T::lit(e)
                    })
                    .collect()
            }
        }
    }

    fn check_dim(&self, z: &[T]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }
}

fn gaussian_log_density<T: Real>(z: &[T], mean: &[T], variance: T) -> T {
    let d = T::from_usize_lossy(z.len());
    let sq: T = z.iter().zip(mean).map(|(&a, &m)| (a - m) * (a - m)).sum();
    -(d * T::lit(0.5)) * (T::TAU() * variance).ln() - sq / (variance + variance)
}
