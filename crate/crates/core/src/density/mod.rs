//! Fitted densities `q(z) = (Σ_k α_k Φ_k(z̃))² / |det L|`, with `z̃` the
//! standardized point when a transform is attached.
//!
//! Besides pointwise evaluation this module provides index-contraction
//! marginals, the sequential inverse-CDF sampler ([`sampling`]), and closed-form
//! first and second moments ([`moments`]).

pub mod cdf;
pub mod moments;
pub mod sampling;

use serde::{Deserialize, Serialize};

use crate::basis1d::BasisFamily;
use crate::error::{Error, Result};
use crate::estimator::WeightVector;
use crate::linalg::SymmetricMatrix;
use crate::product_basis::{PointTables, ProductBasis};
use crate::scalar::{dot, Real};
use crate::standardize::StandardizingTransform;
use crate::target::ScoreTarget;

pub use cdf::{CdfGrid, CdfTable};
pub use moments::Moments;
pub use sampling::{ConditionalCoefficients, SampleBatch, Sampler};

/// Version of the JSON density document.
pub const DENSITY_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityDocument<T>", into = "DensityDocument<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct OfeDensity<T> {
    basis: ProductBasis,
    alpha: WeightVector<T>,
    transform: Option<StandardizingTransform<T>>,
}

/// On-disk form of a density.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct DensityDocument<T> {
    pub schema_version: u32,
    pub families: Vec<BasisFamily>,
    pub orders: Vec<usize>,
    /// Flat weights in row-major multi-index order.
    pub alpha: Vec<T>,
    pub transform: Option<StandardizingTransform<T>>,
}

impl<T: Real> TryFrom<DensityDocument<T>> for OfeDensity<T> {
    type Error = Error;
    fn try_from(doc: DensityDocument<T>) -> Result<Self> {
        if doc.schema_version != DENSITY_SCHEMA_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported density schema version {}",
                doc.schema_version
            )));
        }
        let basis = ProductBasis::new(doc.families, doc.orders)?;
        let alpha = WeightVector::from_unit(doc.alpha, T::lit(1e-6))?;
        let q = OfeDensity::new(basis, alpha)?;
        match doc.transform {
            Some(t) => q.with_transform(t),
            None => Ok(q),
        }
    }
}

impl<T: Real> From<OfeDensity<T>> for DensityDocument<T> {
    fn from(q: OfeDensity<T>) -> Self {
        DensityDocument {
            schema_version: DENSITY_SCHEMA_VERSION,
            families: q.basis.families().to_vec(),
            orders: q.basis.orders().to_vec(),
            alpha: q.alpha.into_inner(),
            transform: q.transform,
        }
    }
}

impl<T: Real> OfeDensity<T> {
    pub fn new(basis: ProductBasis, alpha: WeightVector<T>) -> Result<Self> {
        if alpha.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: alpha.len(),
            });
        }
        Ok(Self {
            basis,
            alpha,
            transform: None,
        })
    }

    /// Attaches a standardizing transform; the density must not already carry one.
    pub fn with_transform(mut self, transform: StandardizingTransform<T>) -> Result<Self> {
        if self.transform.is_some() {
            return Err(Error::TransformAlreadyAttached);
        }
        if transform.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: transform.dim(),
            });
        }
        self.transform = Some(transform);
        Ok(self)
    }

    pub fn basis(&self) -> &ProductBasis {
        &self.basis
    }

    pub fn alpha(&self) -> &WeightVector<T> {
        &self.alpha
    }

    pub fn transform(&self) -> Option<&StandardizingTransform<T>> {
        self.transform.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))
    }

    fn standardized(&self, z: &[T]) -> Result<Vec<T>> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        let zt = match &self.transform {
            Some(t) => t.to_standard(z),
            None => z.to_vec(),
        };
        self.basis.check_point(&zt)?;
        Ok(zt)
    }

    fn log_jacobian(&self) -> T {
        self.transform.as_ref().map_or(T::zero(), |t| t.log_abs_det())
    }

    /// `Σ_k α_k Φ_k(z̃)` at an already standardized, validated point.
    pub(crate) fn expansion_at(&self, zt: &[T]) -> T {
        let mut vals = vec![T::zero(); self.basis.len()];
        PointTables::new(&self.basis, zt, false).products(&self.basis, &mut vals);
        dot(self.alpha.as_slice(), &vals)
    }

    pub fn density(&self, z: &[T]) -> Result<T> {
        let zt = self.standardized(z)?;
        let f = self.expansion_at(&zt);
        Ok(f * f * (-self.log_jacobian()).exp())
    }

    /// `-inf` at exact zeros of the expansion.
    pub fn log_density(&self, z: &[T]) -> Result<T> {
        let zt = self.standardized(z)?;
        let f = self.expansion_at(&zt);
        if f == T::zero() {
            return Ok(T::neg_infinity());
        }
        Ok(T::lit(2.0) * f.abs().ln() - self.log_jacobian())
    }

    /// `∇ log q(z) = L⁻ᵀ · 2 Σ α_k ∇Φ_k(z̃) / Σ α_k Φ_k(z̃)`.
    pub fn score(&self, z: &[T]) -> Result<Vec<T>> {
        let zt = self.standardized(z)?;
        let k = self.basis.len();
        let dim = self.dim();
        let mut vals = vec![T::zero(); k];
        let mut grads = vec![T::zero(); k * dim];
        let tables = PointTables::new(&self.basis, &zt, true);
        tables.products(&self.basis, &mut vals);
        tables.product_grads(&self.basis, &mut grads);
        let alpha = self.alpha.as_slice();
        let f = dot(alpha, &vals);
        if f == T::zero() {
            return Err(Error::Pole);
        }
        let mut g = vec![T::zero(); dim];
        for (j, &a) in alpha.iter().enumerate() {
            for (gd, &dv) in g.iter_mut().zip(&grads[j * dim..(j + 1) * dim]) {
                *gd += a * dv;
            }
        }
        let scale = T::lit(2.0) / f;
        let gt: Vec<T> = g.into_iter().map(|x| x * scale).collect();
        if gt.iter().any(|x| !x.is_finite()) {
            return Err(Error::Pole);
        }
        Ok(match &self.transform {
            Some(t) => t.pull_gradient(&gt),
            None => gt,
        })
    }

    /// Coefficients of the marginal over the first `r` dimensions, obtained by
    /// contracting the trailing indices of the weight tensor.
    pub fn marginal_coefficients(&self, r: usize) -> Result<MarginalCoefficients<T>> {
        if r == 0 || r >= self.dim() {
            return Err(Error::Index {
                index: r,
                valid: format!("1..{}", self.dim()),
            });
        }
        let basis = ProductBasis::new(self.basis.families()[..r].to_vec(), self.basis.orders()[..r].to_vec())?;
        let rows = basis.len();
        let cols = self.basis.len() / rows;
        let alpha = self.alpha.as_slice();
        let mut coeffs = SymmetricMatrix::zeros(rows);
        for i in 0..rows {
            let ri = &alpha[i * cols..(i + 1) * cols];
            for j in i..rows {
                let rj = &alpha[j * cols..(j + 1) * cols];
                coeffs.set(i, j, dot(ri, rj));
            }
        }
        Ok(MarginalCoefficients {
            basis,
            coeffs,
            transform: self.transform.as_ref().map(|t| t.leading(r)),
        })
    }
}

/// Symmetric coefficients `A` of a prefix marginal
/// `q(z_1..z_r) = Σ_{ii'} A_{ii'} Φ_i Φ_{i'}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalCoefficients<T> {
    pub basis: ProductBasis,
    pub coeffs: SymmetricMatrix<T>,
    pub transform: Option<StandardizingTransform<T>>,
}

impl<T: Real> MarginalCoefficients<T> {
    pub fn trace(&self) -> T {
        (0..self.coeffs.n()).map(|i| self.coeffs.get(i, i)).sum()
    }

    pub fn density(&self, z: &[T]) -> Result<T> {
        if z.len() != self.basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                got: z.len(),
            });
        }
        let (zt, log_jac) = match &self.transform {
            Some(t) => (t.to_standard(z), t.log_abs_det()),
            None => (z.to_vec(), T::zero()),
        };
        let mut vals = vec![T::zero(); self.basis.len()];
        self.basis.eval_point(&zt, &mut vals)?;
        Ok(self.coeffs.quadratic_form(&vals) * (-log_jac).exp())
    }
}

/// A fitted density is itself a valid target (normalized, with poles at the
/// nodes of the expansion where the score is reported as NaN).
impl<T: Real> ScoreTarget<T> for OfeDensity<T> {
    fn dim(&self) -> usize {
        OfeDensity::dim(self)
    }

    fn log_density(&self, z: &[T]) -> T {
        OfeDensity::log_density(self, z).unwrap_or(T::neg_infinity())
    }

    fn score(&self, z: &[T]) -> Vec<T> {
        OfeDensity::score(self, z).unwrap_or_else(|_| vec![T::nan(); OfeDensity::dim(self)])
    }
}
