//! Tables of `Φ_kl(ξ) = ∫_{lo}^{ξ} φ_k φ_l` on a fixed grid.
//!
//! With these, the CDF of any `ρ(ξ) = Σ S_kl φ_k φ_l` is `tr[S Φ(ξ)]`,
//! which costs `O(K²)` per grid node instead of a fresh quadrature.

use serde::{Deserialize, Serialize};

use crate::basis1d::{BasisFamily, BasisKind};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Closure tolerance for `Φ(ξ_G) ≈ I`.
pub const CDF_CLOSURE_TOLERANCE: f64 = 1e-6;

/// Uniform abscissae `lo = ξ_1 < … < ξ_G = hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl CdfGrid {
    /// Grid covering the effective support of the first `order` functions.
    pub fn default_for(family: BasisFamily, order: usize) -> Self {
        match family.kind {
            BasisKind::HermiteWeighted => Self {
                lo: -12.0,
                hi: 12.0,
                points: 4001,
            },
            BasisKind::Legendre => Self {
                lo: -1.0,
                hi: 1.0,
                points: 2001.max(100 * order + 1),
            },
            BasisKind::Fourier => Self {
                lo: 0.0,
                hi: std::f64::consts::TAU,
                points: 4001.max(100 * order + 1),
            },
            BasisKind::LaguerreWeighted => {
                let k = order as f64;
                let hi = (4.0 * k + 12.0 * k.sqrt() + 40.0).ceil();
                Self {
                    lo: 0.0,
                    hi,
                    points: (hi * 100.0) as usize + 1,
                }
            }
        }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn node(&self, g: usize) -> f64 {
        if g + 1 == self.points {
            self.hi
        } else {
            self.lo + g as f64 * self.step()
        }
    }
}

#[inline]
pub(crate) fn packed_index(k: usize, l: usize, order: usize) -> usize {
    let (a, b) = if k <= l { (k, l) } else { (l, k) };
    a * order - a * (a + 1) / 2 + b
}

#[derive(Clone, Debug)]
pub struct CdfTable<T> {
    family: BasisFamily,
    order: usize,
    grid: CdfGrid,
    nodes: Vec<T>,
    /// `G` packed upper triangles of `Φ(ξ_g)`.
    phi: Vec<T>,
}

impl<T: Real> CdfTable<T> {
    pub fn build(family: BasisFamily, order: usize) -> Result<Self> {
        Self::build_with_grid(family, order, CdfGrid::default_for(family, order))
    }

    /// Composite Simpson between consecutive nodes, accumulated left to right.
    pub fn build_with_grid(family: BasisFamily, order: usize, grid: CdfGrid) -> Result<Self> {
        family.check_order(order)?;
        if grid.points < 2 || !(grid.lo < grid.hi) {
            return Err(Error::InvalidParameter(
                "CDF grid needs at least two increasing nodes".into(),
            ));
        }
        family.check_point(grid.lo)?;
        family.check_point(grid.hi)?;
        let tri = order * (order + 1) / 2;
        let g_count = grid.points;
        let nodes: Vec<T> = (0..g_count).map(|g| T::lit(grid.node(g))).collect();
        let mut phi = vec![T::zero(); g_count * tri];
        let mut left = vec![T::zero(); order];
        let mut mid = vec![T::zero(); order];
        let mut right = vec![T::zero(); order];
        family.fill_values(nodes[0], &mut left);
        let sixth = T::lit(1.0 / 6.0);
        let four = T::lit(4.0);
        for g in 1..g_count {
            let a = nodes[g - 1];
            let b = nodes[g];
            family.fill_values((a + b) * T::lit(0.5), &mut mid);
            family.fill_values(b, &mut right);
            let w = (b - a) * sixth;
            let (prev, cur) = phi.split_at_mut(g * tri);
            let prev = &prev[(g - 1) * tri..];
            let cur = &mut cur[..tri];
            let mut idx = 0;
            for k in 0..order {
                for l in k..order {
                    let inc = w * (left[k] * left[l] + four * mid[k] * mid[l] + right[k] * right[l]);
                    cur[idx] = prev[idx] + inc;
                    idx += 1;
                }
            }
            std::mem::swap(&mut left, &mut right);
        }
        let table = Self {
            family,
            order,
            grid,
            nodes,
            phi,
        };
        let dev = table.closure_deviation();
        if !(dev <= CDF_CLOSURE_TOLERANCE) {
            return Err(Error::CdfTable {
                deviation: dev,
                suggestion: format!(
                    "widen the grid beyond [{}, {}] or use more than {} points",
                    grid.lo, grid.hi, grid.points
                ),
            });
        }
        Ok(table)
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> CdfGrid {
        self.grid
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Φ_kl(ξ_g)` with 1-based `k`, `l`.
    pub fn entry(&self, g: usize, k: usize, l: usize) -> T {
        let tri = self.order * (self.order + 1) / 2;
        self.phi[g * tri + packed_index(k - 1, l - 1, self.order)]
    }

    /// `max_kl |Φ_kl(ξ_G) − δ_kl|`.
    pub fn closure_deviation(&self) -> f64 {
        let g = self.len() - 1;
        let mut worst: f64 = 0.0;
        for k in 1..=self.order {
            for l in k..=self.order {
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((self.entry(g, k, l).as_f64() - target).abs());
            }
        }
        worst
    }

    /// `tr[S Φ(ξ_g)]` for `S` given as a packed upper triangle.
    pub(crate) fn cdf_at(&self, g: usize, s_packed: &[T]) -> T {
        let tri = s_packed.len();
        let row = &self.phi[g * tri..(g + 1) * tri];
        let mut acc = T::zero();
        let mut idx = 0;
        for k in 0..self.order {
            acc += s_packed[idx] * row[idx];
            idx += 1;
            for _ in k + 1..self.order {
                acc += T::lit(2.0) * s_packed[idx] * row[idx];
                idx += 1;
            }
        }
        acc
    }
}
