//! Tensor-product bases over `D` dimensions.
//!
//! Multi-indices `(m_1, …, m_D)` with `1 ≤ m_d ≤ K_d` are flattened in
//! row-major order (last dimension fastest) to flat indices `1..=K`,
//! `K = Π K_d`. The marginalization, sampling, and moment code all rely on
//! this layout: viewing the flat weight vector as a `K_1 × (K_2⋯K_D)` matrix
//! splits off the first dimension.

use serde::{Deserialize, Serialize};

use crate::basis1d::BasisFamily;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ProductBasisRepr", into = "ProductBasisRepr")]
pub struct ProductBasis {
    dims: Vec<BasisFamily>,
    orders: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

#[derive(Serialize, Deserialize)]
struct ProductBasisRepr {
    families: Vec<BasisFamily>,
    orders: Vec<usize>,
}

impl TryFrom<ProductBasisRepr> for ProductBasis {
    type Error = Error;
    fn try_from(r: ProductBasisRepr) -> Result<Self> {
        ProductBasis::new(r.families, r.orders)
    }
}

impl From<ProductBasis> for ProductBasisRepr {
    fn from(b: ProductBasis) -> Self {
        ProductBasisRepr {
            families: b.dims,
            orders: b.orders,
        }
    }
}

impl ProductBasis {
    pub fn new(dims: Vec<BasisFamily>, orders: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Empty("basis dimensions"));
        }
        if dims.len() != orders.len() {
            return Err(Error::DimensionMismatch {
                expected: dims.len(),
                got: orders.len(),
            });
        }
        for (f, &k) in dims.iter().zip(&orders) {
            f.check_order(k)?;
        }
        let mut strides = vec![1; orders.len()];
        for d in (0..orders.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * orders[d + 1];
        }
        let size = orders.iter().product();
        Ok(Self {
            dims,
            orders,
            strides,
            size,
        })
    }

    /// Same family and order in every dimension.
    pub fn uniform(family: BasisFamily, dim: usize, order: usize) -> Result<Self> {
        Self::new(vec![family; dim], vec![order; dim])
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    /// Total number of product functions `K`.
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn families(&self) -> &[BasisFamily] {
        &self.dims
    }

    pub fn family(&self, d: usize) -> BasisFamily {
        self.dims[d]
    }

    /// Multi-index (1-based per component) to flat index (1-based).
    pub fn flatten(&self, m: &[usize]) -> Result<usize> {
        if m.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: m.len(),
            });
        }
        let mut flat = 0;
        for (d, (&md, &kd)) in m.iter().zip(&self.orders).enumerate() {
            if md == 0 || md > kd {
                return Err(Error::Index {
                    index: md,
                    valid: format!("1..={kd} in dimension {d}"),
                });
            }
            flat += (md - 1) * self.strides[d];
        }
        Ok(flat + 1)
    }

    /// Flat index (1-based) to multi-index.
    pub fn unflatten(&self, i: usize) -> Result<Vec<usize>> {
        if i == 0 || i > self.size {
            return Err(Error::Index {
                index: i,
                valid: format!("1..={}", self.size),
            });
        }
        let mut rem = i - 1;
        Ok(self
            .strides
            .iter()
            .map(|&s| {
                let md = rem / s;
                rem %= s;
                md + 1
            })
            .collect())
    }

    pub fn check_point<T: Real>(&self, z: &[T]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        for (f, &zd) in self.dims.iter().zip(z) {
            f.check_point(zd)?;
        }
        Ok(())
    }

    /// `Φ_i(z) = Π_d φ_{m_d}(z_d)`.
    pub fn eval<T: Real>(&self, i: usize, z: &[T]) -> Result<T> {
        let m = self.unflatten(i)?;
        self.check_point(z)?;
        let mut acc = T::one();
        for ((f, &md), &zd) in self.dims.iter().zip(&m).zip(z) {
            acc *= f.eval(md, zd)?;
        }
        Ok(acc)
    }

    /// `∇Φ_i(z)`; component `d` is `φ'_{m_d}(z_d) Π_{e≠d} φ_{m_e}(z_e)`.
    pub fn grad<T: Real>(&self, i: usize, z: &[T]) -> Result<Vec<T>> {
        let m = self.unflatten(i)?;
        self.check_point(z)?;
        let mut vals = Vec::with_capacity(self.dim());
        let mut ders = Vec::with_capacity(self.dim());
        for ((f, &md), &zd) in self.dims.iter().zip(&m).zip(z) {
            vals.push(f.eval(md, zd)?);
            ders.push(f.eval_grad(md, zd)?);
        }
        Ok((0..self.dim())
            .map(|d| (0..self.dim()).fold(T::one(), |acc, e| acc * if e == d { ders[e] } else { vals[e] }))
            .collect())
    }

    /// All `K` product values at `z` into `values`.
    pub fn eval_point<T: Real>(&self, z: &[T], values: &mut [T]) -> Result<()> {
        self.check_point(z)?;
        let tables = PointTables::new(self, z, false);
        tables.products(self, values);
        Ok(())
    }

    /// All `K` values and gradients at `z`. `grads` is `K × D` row-major.
    pub fn eval_point_with_grad<T: Real>(&self, z: &[T], values: &mut [T], grads: &mut [T]) -> Result<()> {
        self.check_point(z)?;
        let tables = PointTables::new(self, z, true);
        tables.products(self, values);
        tables.product_grads(self, grads);
        Ok(())
    }
}

/// Per-dimension 1-D tables at a single point, combined on demand into the
/// `K` product values. The 1-D evaluations cost `Σ K_d`; only the outer
/// products touch all `K` entries.
pub(crate) struct PointTables<T> {
    values: Vec<Vec<T>>,
    grads: Vec<Vec<T>>,
}

impl<T: Real> PointTables<T> {
    /// Point must already be validated against the support.
    pub(crate) fn new(basis: &ProductBasis, z: &[T], with_grad: bool) -> Self {
        let mut values = Vec::with_capacity(basis.dim());
        let mut grads = Vec::with_capacity(if with_grad { basis.dim() } else { 0 });
        for ((f, &k), &zd) in basis.dims.iter().zip(&basis.orders).zip(z) {
            let mut v = vec![T::zero(); k];
            if with_grad {
                let mut g = vec![T::zero(); k];
                f.fill(zd, &mut v, &mut g);
                grads.push(g);
            } else {
                f.fill_values(zd, &mut v);
            }
            values.push(v);
        }
        Self { values, grads }
    }

    pub(crate) fn products(&self, basis: &ProductBasis, out: &mut [T]) {
        let factors: Vec<&[T]> = self.values.iter().map(Vec::as_slice).collect();
        outer_product(&factors, basis.len(), out);
    }

    pub(crate) fn product_grads(&self, basis: &ProductBasis, out: &mut [T]) {
        let dim = basis.dim();
        let k = basis.len();
        let mut scratch = vec![T::zero(); k];
        for d in 0..dim {
            let factors: Vec<&[T]> = (0..dim)
                .map(|e| {
                    if e == d {
                        self.grads[e].as_slice()
                    } else {
                        self.values[e].as_slice()
                    }
                })
                .collect();
            outer_product(&factors, k, &mut scratch);
            for (j, &g) in scratch.iter().enumerate() {
                out[j * dim + d] = g;
            }
        }
    }
}

/// Row-major Kronecker product of 1-D factor vectors.
fn outer_product<T: Real>(factors: &[&[T]], total: usize, out: &mut [T]) {
    debug_assert_eq!(out.len(), total);
    out[0] = T::one();
    let mut len = 1;
    for f in factors {
        // Expand in place from the back so earlier entries stay readable.
        let kd = f.len();
        for a in (0..len).rev() {
            let base = out[a];
            for (j, &v) in f.iter().enumerate().rev() {
                out[a * kd + j] = base * v;
            }
        }
        len *= kd;
    }
}
