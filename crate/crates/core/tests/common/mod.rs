#![allow(dead_code)]

use eigenvi_core::{BasisFamily, OfeDensity, ProductBasis, WeightVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn random_unit<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

pub fn hermite_density<R: Rng>(rng: &mut R, orders: &[usize]) -> OfeDensity<f64> {
    let basis = ProductBasis::new(vec![BasisFamily::hermite(); orders.len()], orders.to_vec()).unwrap();
    let alpha = random_unit(rng, basis.len());
    OfeDensity::new(basis, WeightVector::new(alpha).unwrap()).unwrap()
}

/// Tensor Gauss–Legendre rule on a box: nodes and weights.
pub fn grid_2d(lo: f64, hi: f64, panels: usize) -> Vec<([f64; 2], f64)> {
    let rule = eigenvi_core::quadrature::GaussLegendre::new(20);
    let (x, w) = rule.composite::<f64>(lo, hi, panels);
    let mut out = Vec::with_capacity(x.len() * x.len());
    for (xi, wi) in x.iter().zip(&w) {
        for (yj, wj) in x.iter().zip(&w) {
            out.push(([*xi, *yj], wi * wj));
        }
    }
    out
}
