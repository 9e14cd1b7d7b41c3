//! Exact sequential sampling `z_1 ∼ q(z_1)`, `z_2 ∼ q(z_2 | z_1)`, … by
//! inverse-transform draws from one-dimensional densities
//! `ρ(ξ) = Σ S_kl φ_k(ξ) φ_l(ξ)` with `S ⪰ 0`, `tr S = 1`.
//!
//! After the first `d` coordinates are fixed, the weight tensor contracted
//! against `φ(z_1) ⊗ … ⊗ φ(z_d)` leaves a `K_{d+1} × (K_{d+2}⋯K_D)` matrix
//! `G`; the conditional of `z_{d+1}` has coefficients `S = G Gᵀ / tr(G Gᵀ)`.
//! Each step costs `O(K · K_{d+1})`, so a full draw is at most quadratic in `K`.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;

use crate::basis1d::BasisFamily;
use crate::density::cdf::{packed_index, CdfGrid, CdfTable};
use crate::density::OfeDensity;
use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;
use crate::scalar::{dot, Real};

/// Trace-one PSD coefficients of a 1-D conditional density.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalCoefficients<T> {
    pub s: SymmetricMatrix<T>,
}

impl<T: Real> ConditionalCoefficients<T> {
    pub fn trace(&self) -> T {
        (0..self.s.n()).map(|i| self.s.get(i, i)).sum()
    }

    /// `ρ(ξ)` for the given family.
    pub fn density(&self, family: BasisFamily, xi: T) -> Result<T> {
        let mut v = vec![T::zero(); self.s.n()];
        family.eval_all(xi, &mut v)?;
        Ok(self.s.quadratic_form(&v))
    }

    fn packed(&self) -> Vec<T> {
        let n = self.s.n();
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for k in 0..n {
            for l in k..n {
                out.push(self.s.get(k, l));
            }
        }
        out
    }
}

/// Contracted weights after fixing a prefix of standardized coordinates.
fn contract_prefix<T: Real>(q: &OfeDensity<T>, prefix: &[T]) -> Result<Vec<T>> {
    let mut gamma = q.alpha().as_slice().to_vec();
    for (d, &zd) in prefix.iter().enumerate() {
        let fam = q.basis().family(d);
        let kd = q.basis().orders()[d];
        let mut phi = vec![T::zero(); kd];
        fam.eval_all(zd, &mut phi)?;
        gamma = contract_leading(&gamma, &phi);
    }
    Ok(gamma)
}

/// `γ'_t = Σ_j γ_{j,t} φ_j` for `γ` viewed as `len(φ) × rest`.
fn contract_leading<T: Real>(gamma: &[T], phi: &[T]) -> Vec<T> {
    let rest = gamma.len() / phi.len();
    let mut out = vec![T::zero(); rest];
    for (j, &p) in phi.iter().enumerate() {
        for (o, &g) in out.iter_mut().zip(&gamma[j * rest..(j + 1) * rest]) {
            *o += g * p;
        }
    }
    out
}

/// `S = G Gᵀ / tr(G Gᵀ)` for `G` = `gamma` viewed as `order × rest`.
fn coefficients_from_gamma<T: Real>(gamma: &[T], order: usize) -> SymmetricMatrix<T> {
    let rest = gamma.len() / order;
    let mut s = SymmetricMatrix::zeros(order);
    for i in 0..order {
        let gi = &gamma[i * rest..(i + 1) * rest];
        for j in i..order {
            s.set(i, j, dot(gi, &gamma[j * rest..(j + 1) * rest]));
        }
    }
    let tr: T = (0..order).map(|i| s.get(i, i)).sum();
    if tr > T::zero() && tr.is_finite() {
        s.scale(tr.recip());
    } else {
        // every remaining term vanishes at this prefix; fall back to φ_1²
        s = SymmetricMatrix::zeros(order);
        s.set(0, 0, T::one());
    }
    s
}

/// Coefficients of `q(z_{d+1} | z_1..z_d)` in standardized coordinates,
/// `d = prefix.len()`. An empty prefix gives the first marginal.
pub fn conditional_coefficients<T: Real>(q: &OfeDensity<T>, prefix: &[T]) -> Result<ConditionalCoefficients<T>> {
    if prefix.len() >= q.dim() {
        return Err(Error::Index {
            index: prefix.len(),
            valid: format!("0..{}", q.dim()),
        });
    }
    let gamma = contract_prefix(q, prefix)?;
    let order = q.basis().orders()[prefix.len()];
    Ok(ConditionalCoefficients {
        s: coefficients_from_gamma(&gamma, order),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch<T> {
    pub points: Vec<Vec<T>>,
    /// Draws whose uniform variate fell beyond the tabulated CDF range and
    /// were clamped to the upper grid end.
    pub tail_clips: usize,
}

/// Sampler with one CDF table per distinct `(family, order)` pair.
#[derive(Clone, Debug)]
pub struct Sampler<T> {
    density: OfeDensity<T>,
    tables: Vec<Arc<CdfTable<T>>>,
}

impl<T: Real> Sampler<T> {
    pub fn new(density: &OfeDensity<T>) -> Result<Self> {
        let grids: Vec<CdfGrid> = density
            .basis()
            .families()
            .iter()
            .zip(density.basis().orders())
            .map(|(&f, &k)| CdfGrid::default_for(f, k))
            .collect();
        Self::with_grids(density, &grids)
    }

    pub fn with_grids(density: &OfeDensity<T>, grids: &[CdfGrid]) -> Result<Self> {
        if grids.len() != density.dim() {
            return Err(Error::DimensionMismatch {
                expected: density.dim(),
                got: grids.len(),
            });
        }
        // keyed by family, order and the grid (bounds as bits, point count)
        type Key = (BasisFamily, usize, u64, u64, usize);
        let mut cache: HashMap<Key, Arc<CdfTable<T>>> = HashMap::new();
        let mut tables = Vec::with_capacity(density.dim());
        for ((&fam, &k), grid) in density
            .basis()
            .families()
            .iter()
            .zip(density.basis().orders())
            .zip(grids)
        {
            let key = (fam, k, grid.lo.to_bits(), grid.hi.to_bits(), grid.points);
            let table = match cache.get(&key) {
                Some(t) => Arc::clone(t),
                None => {
                    let t = Arc::new(CdfTable::build_with_grid(fam, k, *grid)?);
                    cache.insert(key, Arc::clone(&t));
                    t
                }
            };
            tables.push(table);
        }
        Ok(Self {
            density: density.clone(),
            tables,
        })
    }

    pub fn tables(&self) -> &[Arc<CdfTable<T>>] {
        &self.tables
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> SampleBatch<T> {
        let mut tail_clips = 0;
        let points = (0..n).map(|_| self.sample_one(rng, &mut tail_clips)).collect();
        SampleBatch { points, tail_clips }
    }

    /// One joint draw in original coordinates.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R, tail_clips: &mut usize) -> Vec<T> {
        let basis = self.density.basis();
        let mut gamma = self.density.alpha().as_slice().to_vec();
        let mut zt = Vec::with_capacity(basis.dim());
        for (d, table) in self.tables.iter().enumerate() {
            let order = basis.orders()[d];
            let s = ConditionalCoefficients {
                s: coefficients_from_gamma(&gamma, order),
            };
            let u: f64 = rng.random();
            let (xi, clipped) = invert_cdf(table, &s.packed(), T::lit(u));
            if clipped {
                *tail_clips += 1;
            }
            let mut phi = vec![T::zero(); order];
            table.family().fill_values(xi, &mut phi);
            gamma = contract_leading(&gamma, &phi);
            zt.push(xi);
        }
        match self.density.transform() {
            Some(t) => t.from_standard(&zt),
            None => zt,
        }
    }
}

fn rho<T: Real>(family: BasisFamily, s_packed: &[T], order: usize, x: T, phi: &mut [T]) -> T {
    family.fill_values(x, phi);
    let mut acc = T::zero();
    for k in 0..order {
        acc += s_packed[packed_index(k, k, order)] * phi[k] * phi[k];
        for l in k + 1..order {
            acc += T::lit(2.0) * s_packed[packed_index(k, l, order)] * phi[k] * phi[l];
        }
    }
    acc.max(T::zero())
}

/// Solves `tr[S Φ(ξ)] = u`: binary search for the bracketing cell, a linear
/// first guess, then Newton steps on the exact density with a Simpson partial
/// integral from the cell's left node.
fn invert_cdf<T: Real>(table: &CdfTable<T>, s_packed: &[T], u: T) -> (T, bool) {
    let nodes = table.nodes();
    let last = nodes.len() - 1;
    let c_last = table.cdf_at(last, s_packed);
    if u >= c_last {
        return (nodes[last], true);
    }
    let (mut lo, mut hi) = (0usize, last);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if table.cdf_at(mid, s_packed) <= u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = nodes[lo];
    let b = nodes[hi];
    let ca = table.cdf_at(lo, s_packed);
    let cb = table.cdf_at(hi, s_packed);
    let mut x = if cb > ca {
        a + (b - a) * (u - ca) / (cb - ca)
    } else {
        (a + b) * T::lit(0.5)
    };
    let order = table.order();
    let family = table.family();
    let mut phi = vec![T::zero(); order];
    let ra = rho(family, s_packed, order, a, &mut phi);
    for _ in 0..3 {
        let m = (a + x) * T::lit(0.5);
        let rm = rho(family, s_packed, order, m, &mut phi);
        let rx = rho(family, s_packed, order, x, &mut phi);
        let cx = ca + (x - a) / T::lit(6.0) * (ra + T::lit(4.0) * rm + rx);
        if !(rx > T::zero()) {
            break;
        }
        let next = (x - (cx - u) / rx).max(a).min(b);
        if (next - x).abs() <= T::epsilon() * (T::one() + x.abs()) {
            x = next;
            break;
        }
        x = next;
    }
    (x, false)
}

impl<T: Real> OfeDensity<T> {
    /// Convenience wrapper building a [`Sampler`] with default grids.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<SampleBatch<T>> {
        Ok(Sampler::new(self)?.sample(rng, n))
    }
}
