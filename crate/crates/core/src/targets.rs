//! Normalized synthetic targets with analytic scores and exact samplers.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::density::{OfeDensity, Sampler};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, mul_lower, solve_lower, solve_lower_transpose};
use crate::scalar::{log_sum_exp, Real};
use crate::target::ScoreTarget;

/// A target with a normalized log-density and an exact sampler.
pub trait ExactTarget<T: Real>: ScoreTarget<T> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<Vec<T>>>;
}

/// Multivariate normal stored through its Cholesky factor.
#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian<T> {
    mean: Vec<T>,
    l: Vec<T>,
    log_norm: T,
}

impl<T: Real> Gaussian<T> {
    /// `cov` is row-major `D × D`, symmetric positive definite.
    pub fn new(mean: Vec<T>, cov: &[T]) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::Empty("Gaussian mean"));
        }
        if cov.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: cov.len(),
            });
        }
        check_symmetric(cov, d)?;
        let l = cholesky(cov, d)?;
        let log_det_half: T = (0..d).map(|i| l[i * d + i].ln()).sum();
        let log_norm = -T::lit(0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln()) - log_det_half;
        Ok(Self { mean, l, log_norm })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    /// Row-major `L Lᵀ`.
    pub fn covariance(&self) -> Vec<T> {
        let d = self.dim();
        let mut c = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                c[i * d + j] = (0..=i.min(j)).map(|k| self.l[i * d + k] * self.l[j * d + k]).sum();
            }
        }
        c
    }

    fn whiten(&self, z: &[T]) -> Vec<T> {
        let c: Vec<T> = z.iter().zip(&self.mean).map(|(&a, &m)| a - m).collect();
        solve_lower(&self.l, self.dim(), &c)
    }

    pub fn log_density(&self, z: &[T]) -> T {
        let w = self.whiten(z);
        self.log_norm - T::lit(0.5) * w.iter().map(|&x| x * x).sum::<T>()
    }

    pub fn score(&self, z: &[T]) -> Vec<T> {
        let w = self.whiten(z);
        solve_lower_transpose(&self.l, self.dim(), &w)
            .into_iter()
            .map(|x| -x)
            .collect()
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let e = standard_normals(rng, self.dim());
        mul_lower(&self.l, self.dim(), &e)
            .into_iter()
            .zip(&self.mean)
            .map(|(a, &m)| a + m)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture<T> {
    log_weights: Vec<T>,
    components: Vec<Gaussian<T>>,
}

impl<T: Real> GaussianMixture<T> {
    /// Weights must be nonnegative and sum to one (to 1e-9).
    pub fn new(weights: Vec<T>, components: Vec<Gaussian<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Empty("mixture components"));
        }
        if weights.len() != components.len() {
            return Err(Error::DimensionMismatch {
                expected: components.len(),
                got: weights.len(),
            });
        }
        let d = components[0].dim();
        if let Some(c) = components.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: c.dim(),
            });
        }
        if weights.iter().any(|&w| !(w >= T::zero())) {
            return Err(Error::InvalidParameter("mixture weights must be nonnegative".into()));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-9) {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(Self {
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            components,
        })
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn components(&self) -> &[Gaussian<T>] {
        &self.components
    }

    pub fn weights(&self) -> Vec<T> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    fn component_logs(&self, z: &[T]) -> Vec<T> {
        self.log_weights
            .iter()
            .zip(&self.components)
            .map(|(&lw, c)| lw + c.log_density(z))
            .collect()
    }

    pub fn log_density(&self, z: &[T]) -> T {
        log_sum_exp(&self.component_logs(z))
    }

    /// Responsibility-weighted component scores.
    pub fn score(&self, z: &[T]) -> Vec<T> {
        let logs = self.component_logs(z);
        let total = log_sum_exp(&logs);
        let mut g = vec![T::zero(); self.dim()];
        for (lc, c) in logs.iter().zip(&self.components) {
            let r = (*lc - total).exp();
            if r == T::zero() {
                continue;
            }
            for (gi, si) in g.iter_mut().zip(c.score(z)) {
                *gi += r * si;
            }
        }
        g
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = self.components.len() - 1;
        for (i, lw) in self.log_weights.iter().enumerate() {
            acc += lw.exp().as_f64();
            if u < acc {
                pick = i;
                break;
            }
        }
        self.components[pick].sample_one(rng)
    }
}

/// Sinh-arcsinh normal: `S(Z) ∼ N(0, Σ)` with
/// `S_d(z) = sinh(τ_d asinh(z_d) − s_d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SinhArcsinh<T> {
    s: Vec<T>,
    tau: Vec<T>,
    base: Gaussian<T>,
}

impl<T: Real> SinhArcsinh<T> {
    pub fn new(s: Vec<T>, tau: Vec<T>, cov: &[T]) -> Result<Self> {
        let d = s.len();
        if tau.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: tau.len(),
            });
        }
        if tau.iter().any(|&t| !(t > T::zero()) || !t.is_finite()) {
            return Err(Error::InvalidParameter("tau must be strictly positive".into()));
        }
        let base = Gaussian::new(vec![T::zero(); d], cov)?;
        Ok(Self { s, tau, base })
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    pub fn skew(&self) -> &[T] {
        &self.s
    }

    pub fn tailweight(&self) -> &[T] {
        &self.tau
    }

    fn inner(&self, z: &[T]) -> Vec<T> {
        z.iter()
            .zip(self.s.iter().zip(&self.tau))
            .map(|(&x, (&s, &t))| t * x.asinh() - s)
            .collect()
    }

    pub fn log_density(&self, z: &[T]) -> T {
        let a = self.inner(z);
        let sz: Vec<T> = a.iter().map(|x| x.sinh()).collect();
        let mut lp = self.base.log_density(&sz);
        for ((&x, &ad), &t) in z.iter().zip(&a).zip(&self.tau) {
            lp += t.ln() + log_cosh(ad) - T::lit(0.5) * (x * x).ln_1p();
        }
        lp
    }

    pub fn score(&self, z: &[T]) -> Vec<T> {
        let a = self.inner(z);
        let sz: Vec<T> = a.iter().map(|x| x.sinh()).collect();
        // ∇_S log N(S; 0, Σ) = −Σ⁻¹ S
        let gs = self.base.score(&sz);
        z.iter()
            .zip(&a)
            .zip(&self.tau)
            .zip(gs)
            .map(|(((&x, &ad), &t), g)| {
                let r = (T::one() + x * x).sqrt();
                let da = t / r;
                -x / (r * r) + ad.tanh() * da + g * ad.cosh() * da
            })
            .collect()
    }

    /// `Z = sinh((asinh Z₀ + s) / τ)`, the inverse of `S`, with `Z₀ ∼ N(0, Σ)`.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        self.base
            .sample_one(rng)
            .into_iter()
            .zip(self.s.iter().zip(&self.tau))
            .map(|(z0, (&s, &t))| ((z0.asinh() + s) / t).sinh())
            .collect()
    }
}

fn log_cosh<T: Real>(x: T) -> T {
    let ax = x.abs();
    ax + (-T::lit(2.0) * ax).exp().ln_1p() - T::LN_2()
}

fn check_symmetric<T: Real>(a: &[T], d: usize) -> Result<()> {
    for i in 0..d {
        for j in i + 1..d {
            let (x, y) = (a[i * d + j], a[j * d + i]);
            if (x - y).abs() > T::lit(1e-12) * (T::one() + x.abs().max(y.abs())) {
                return Err(Error::InvalidParameter(format!(
                    "covariance not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

fn standard_normals<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<T> {
    (0..n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(rng);
            T::lit(e)
        })
        .collect()
}

/// Benchmark targets.
#[derive(Clone, Debug, PartialEq)]
pub enum SyntheticTarget<T> {
    Gaussian(Gaussian<T>),
    GaussianMixture(GaussianMixture<T>),
    /// `z₁ ∼ N(0, σ²)`, `z₂ | z₁ ∼ N(0, e^{z₁/2})`, the second argument read as a variance.
    Funnel {
        sigma2: T,
    },
    /// Four-component Gaussian mixture shaped like a plus sign.
    Cross(GaussianMixture<T>),
    SinhArcsinh(SinhArcsinh<T>),
}

impl<T: Real> SyntheticTarget<T> {
    pub fn gaussian(mean: Vec<T>, cov: Vec<T>) -> Result<Self> {
        Ok(Self::Gaussian(Gaussian::new(mean, &cov)?))
    }

    /// Component covariances are row-major.
    pub fn mixture(weights: Vec<T>, means: Vec<Vec<T>>, covs: Vec<Vec<T>>) -> Result<Self> {
        if means.len() != covs.len() {
            return Err(Error::DimensionMismatch {
                expected: means.len(),
                got: covs.len(),
            });
        }
        let comps = means
            .into_iter()
            .zip(covs)
            .map(|(m, c)| Gaussian::new(m, &c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::GaussianMixture(GaussianMixture::new(weights, comps)?))
    }

    pub fn funnel(sigma2: T) -> Result<Self> {
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter("funnel sigma2 must be positive".into()));
        }
        Ok(Self::Funnel { sigma2 })
    }

    /// Equal-weight mixture with means `(0, ±2)`, `(±2, 0)` and diagonal
    /// covariances `diag(0.15^0.9, 1)` / `diag(1, 0.15^0.9)`.
    pub fn cross() -> Self {
        let a = T::lit(0.15f64.powf(0.9));
        let one = T::one();
        let z = T::zero();
        let two = T::lit(2.0);
        let s1 = vec![a, z, z, one];
        let s2 = vec![one, z, z, a];
        let comps = [
            (vec![z, two], &s1),
            (vec![-two, z], &s2),
            (vec![two, z], &s2),
            (vec![z, -two], &s1),
        ]
        .into_iter()
        .map(|(m, c)| Gaussian::new(m, c).expect("fixed parameters"))
        .collect();
        Self::Cross(GaussianMixture::new(vec![T::lit(0.25); 4], comps).expect("fixed parameters"))
    }

    pub fn sinh_arcsinh(s: Vec<T>, tau: Vec<T>, cov: Vec<T>) -> Result<Self> {
        Ok(Self::SinhArcsinh(SinhArcsinh::new(s, tau, &cov)?))
    }

    /// `0.4 N([−1, 1], [[2, 0.1], [0.1, 2]]) + 0.3 N([1.1, 1.1], 0.5 I) + 0.3 N([−1, −1], 0.5 I)`.
    pub fn mixture_2d() -> Self {
        let f = T::lit;
        Self::mixture(
            vec![f(0.4), f(0.3), f(0.3)],
            vec![vec![f(-1.0), f(1.0)], vec![f(1.1), f(1.1)], vec![f(-1.0), f(-1.0)]],
            vec![
                vec![f(2.0), f(0.1), f(0.1), f(2.0)],
                vec![f(0.5), f(0.0), f(0.0), f(0.5)],
                vec![f(0.5), f(0.0), f(0.0), f(0.5)],
            ],
        )
        .expect("fixed parameters")
    }

    /// Funnel with `σ² = 1.2`.
    pub fn funnel_2d() -> Self {
        Self::funnel(T::lit(1.2)).expect("fixed parameters")
    }

    /// `0.5 N(−1.5, 0.5) + 0.5 N(1.5, 0.5)` on the line.
    pub fn bimodal_1d() -> Self {
        let f = T::lit;
        Self::mixture(
            vec![f(0.5), f(0.5)],
            vec![vec![f(-1.5)], vec![f(1.5)]],
            vec![vec![f(0.5)], vec![f(0.5)]],
        )
        .expect("fixed parameters")
    }

    /// 2-D sinh-arcsinh fixtures with identity covariance, `which` in `1..=3`:
    /// `s = (0.2, 0.2), τ = (1.1, 1.1)`; `s = (0.2, 0.5), τ = (1.1, 1.1)`;
    /// `s = (0.2, 0.2), τ = (1.4, 1.1)`.
    pub fn sinh_arcsinh_2d(which: usize) -> Result<Self> {
        let (s, tau) = match which {
            1 => ([0.2, 0.2], [1.1, 1.1]),
            2 => ([0.2, 0.5], [1.1, 1.1]),
            3 => ([0.2, 0.2], [1.4, 1.1]),
            _ => {
                return Err(Error::Index {
                    index: which,
                    valid: "1..=3".into(),
                })
            }
        };
        let f = T::lit;
        Self::sinh_arcsinh(
            s.iter().map(|&x| f(x)).collect(),
            tau.iter().map(|&x| f(x)).collect(),
            vec![f(1.0), f(0.0), f(0.0), f(1.0)],
        )
    }

    /// 5-D sinh-arcsinh fixtures, `which` in `1..=3`, sharing the covariance
    /// with 2.2 on the diagonal and 0.3 at entries (1,2), (1,5), (3,4).
    pub fn sinh_arcsinh_5d(which: usize) -> Result<Self> {
        let (s, tau): ([f64; 5], [f64; 5]) = match which {
            1 => ([0.0, 0.0, 0.2, 0.2, 0.2], [1.0, 1.0, 1.0, 1.0, 1.1]),
            2 => ([0.0, 0.0, 0.6, 0.4, -0.5], [1.0, 1.0, 1.0, 1.0, 1.1]),
            3 => ([0.2, 0.2, 0.2, 0.2, 0.2], [1.1, 1.1, 1.0, 1.4, 1.6]),
            _ => {
                return Err(Error::Index {
                    index: which,
                    valid: "1..=3".into(),
                })
            }
        };
        let mut cov = [0.0; 25];
        for i in 0..5 {
            cov[i * 5 + i] = 2.2;
        }
        for (i, j) in [(0, 1), (0, 4), (2, 3)] {
            cov[i * 5 + j] = 0.3;
            cov[j * 5 + i] = 0.3;
        }
        Self::sinh_arcsinh(
            s.iter().map(|&x| T::lit(x)).collect(),
            tau.iter().map(|&x| T::lit(x)).collect(),
            cov.iter().map(|&x| T::lit(x)).collect(),
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian(_) => "gaussian",
            Self::GaussianMixture(_) => "gaussian_mixture",
            Self::Funnel { .. } => "funnel",
            Self::Cross(_) => "cross",
            Self::SinhArcsinh(_) => "sinh_arcsinh",
        }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        match self {
            Self::Gaussian(g) => g.sample_one(rng),
            Self::GaussianMixture(m) | Self::Cross(m) => m.sample_one(rng),
            Self::Funnel { sigma2 } => {
                let e: Vec<T> = standard_normals(rng, 2);
                let z1 = sigma2.sqrt() * e[0];
                let z2 = (z1 * T::lit(0.25)).exp() * e[1];
                vec![z1, z2]
            }
            Self::SinhArcsinh(s) => s.sample_one(rng),
        }
    }
}

impl<T: Real> ScoreTarget<T> for SyntheticTarget<T> {
    fn dim(&self) -> usize {
        match self {
            Self::Gaussian(g) => g.dim(),
            Self::GaussianMixture(m) | Self::Cross(m) => m.dim(),
            Self::Funnel { .. } => 2,
            Self::SinhArcsinh(s) => s.dim(),
        }
    }

    fn log_density(&self, z: &[T]) -> T {
        match self {
            Self::Gaussian(g) => g.log_density(z),
            Self::GaussianMixture(m) | Self::Cross(m) => m.log_density(z),
            Self::Funnel { sigma2 } => {
                let half = T::lit(0.5);
                let ln2pi = T::lit((2.0 * std::f64::consts::PI).ln());
                let (z1, z2) = (z[0], z[1]);
                // log N(z1 | 0, σ²) + log N(z2 | 0, e^{z1/2})
                -half * (ln2pi + sigma2.ln())
                    - z1 * z1 / (T::lit(2.0) * *sigma2)
                    - half * ln2pi
                    - z1 * T::lit(0.25)
                    - half * z2 * z2 * (-z1 * half).exp()
            }
            Self::SinhArcsinh(s) => s.log_density(z),
        }
    }

    fn score(&self, z: &[T]) -> Vec<T> {
        match self {
            Self::Gaussian(g) => g.score(z),
            Self::GaussianMixture(m) | Self::Cross(m) => m.score(z),
            Self::Funnel { sigma2 } => {
                let (z1, z2) = (z[0], z[1]);
                let e = (-z1 * T::lit(0.5)).exp();
                vec![-z1 / *sigma2 - T::lit(0.25) + z2 * z2 * e * T::lit(0.25), -z2 * e]
            }
            Self::SinhArcsinh(s) => s.score(z),
        }
    }
}

impl<T: Real> ExactTarget<T> for SyntheticTarget<T> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<Vec<T>>> {
        Ok((0..n).map(|_| self.sample_one(rng)).collect())
    }
}

impl<T: Real> ExactTarget<T> for OfeDensity<T> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<Vec<T>>> {
        Ok(Sampler::new(self)?.sample(rng, n).points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_2d() -> Vec<SyntheticTarget<f64>> {
        vec![
            SyntheticTarget::mixture_2d(),
            SyntheticTarget::funnel_2d(),
            SyntheticTarget::cross(),
            SyntheticTarget::sinh_arcsinh_2d(1).unwrap(),
            SyntheticTarget::sinh_arcsinh_2d(2).unwrap(),
            SyntheticTarget::sinh_arcsinh_2d(3).unwrap(),
        ]
    }

    #[test]
    fn funnel_at_origin() {
        let t = SyntheticTarget::<f64>::funnel_2d();
        assert_relative_eq!(t.log_density(&[0.0, 0.0]), -1.929038, epsilon = 1e-6);
        let g = t.score(&[0.0, 0.0]);
        assert_relative_eq!(g[0], -0.25, epsilon = 1e-15);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn identity_sinh_arcsinh_is_gaussian() {
        let cov = vec![1.5, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.8];
        let sas = SyntheticTarget::sinh_arcsinh(vec![0.0; 3], vec![1.0; 3], cov.clone()).unwrap();
        let g = SyntheticTarget::gaussian(vec![0.0; 3], cov).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let z: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
            assert!((sas.log_density(&z) - g.log_density(&z)).abs() < 1e-10);
        }
    }

    #[test]
    fn single_component_mixture_is_gaussian() {
        let m = SyntheticTarget::mixture(vec![1.0], vec![vec![0.5, -1.0]], vec![vec![2.0, 0.4, 0.4, 1.0]]).unwrap();
        let g = SyntheticTarget::gaussian(vec![0.5, -1.0], vec![2.0, 0.4, 0.4, 1.0]).unwrap();
        for z in [[0.0, 0.0], [1.3, -2.2], [-3.0, 4.0]] {
            assert_relative_eq!(m.log_density(&z), g.log_density(&z), epsilon = 1e-13);
        }
    }

    #[test]
    fn scores_match_finite_differences() {
        let mut targets = all_2d();
        targets.push(SyntheticTarget::sinh_arcsinh_5d(3).unwrap());
        targets.push(SyntheticTarget::bimodal_1d());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-5;
        for t in &targets {
            let d = t.dim();
            for _ in 0..100 {
                let z: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
                let g = t.score(&z);
                for i in 0..d {
                    let mut zp = z.clone();
                    let mut zm = z.clone();
                    zp[i] += h;
                    zm[i] -= h;
                    let fd = (t.log_density(&zp) - t.log_density(&zm)) / (2.0 * h);
                    assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "{} {z:?} {i}", t.name());
                }
            }
        }
    }

    #[test]
    fn two_dimensional_targets_normalize() {
        let rule = GaussLegendre::new(20);
        for t in all_2d() {
            // the funnel is wide in z2 when z1 is large
            let (a, b) = match t {
                SyntheticTarget::Funnel { .. } => ((-12.0, 12.0), (-150.0, 150.0)),
                _ => ((-15.0, 15.0), (-15.0, 15.0)),
            };
            let total = rule.integrate(a.0, a.1, 60, |x: f64| {
                rule.integrate(b.0, b.1, 300, |y: f64| t.log_density(&[x, y]).exp())
            });
            assert!((total - 1.0).abs() < 1e-4, "{} integrates to {total}", t.name());
        }
    }

    #[test]
    fn sampler_means_match_quadrature() {
        let rule = GaussLegendre::new(20);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in [
            SyntheticTarget::mixture_2d(),
            SyntheticTarget::cross(),
            SyntheticTarget::sinh_arcsinh_2d(2).unwrap(),
        ] {
            let n = 100_000;
            let pts = t.sample(&mut rng, n).unwrap();
            for k in 0..2 {
                let m = rule.integrate(-15.0, 15.0, 60, |x: f64| {
                    rule.integrate(-15.0, 15.0, 60, |y: f64| [x, y][k] * t.log_density(&[x, y]).exp())
                });
                let v = rule.integrate(-15.0, 15.0, 60, |x: f64| {
                    rule.integrate(-15.0, 15.0, 60, |y: f64| {
                        ([x, y][k] - m).powi(2) * t.log_density(&[x, y]).exp()
                    })
                });
                let emp = pts.iter().map(|p| p[k]).sum::<f64>() / n as f64;
                assert!(
                    (emp - m).abs() < 4.0 * (v / n as f64).sqrt(),
                    "{} dim {k}: {emp} vs {m}",
                    t.name()
                );
            }
        }
    }

    #[test]
    fn funnel_sampler_variance() {
        let t = SyntheticTarget::<f64>::funnel_2d();
        let n = 100_000;
        let pts = t.sample(&mut ChaCha8Rng::seed_from_u64(4), n).unwrap();
        let v1 = pts.iter().map(|p| p[0] * p[0]).sum::<f64>() / n as f64;
        // E z2² = E e^{z1/2} = e^{σ²/8}
        let v2 = pts.iter().map(|p| p[1] * p[1]).sum::<f64>() / n as f64;
        assert!((v1 - 1.2).abs() < 0.03);
        assert!((v2 - (1.2f64 / 8.0).exp()).abs() < 0.05);
    }

    #[test]
    fn invalid_parameters() {
        assert!(SyntheticTarget::<f64>::funnel(0.0).is_err());
        assert!(
            SyntheticTarget::mixture(vec![0.5, 0.6], vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![1.0]]).is_err()
        );
        assert!(
            SyntheticTarget::mixture(vec![1.5, -0.5], vec![vec![0.0], vec![1.0]], vec![vec![1.0], vec![1.0]]).is_err()
        );
        assert!(SyntheticTarget::gaussian(vec![0.0, 0.0], vec![1.0, 2.0, 2.0, 1.0]).is_err());
        assert!(SyntheticTarget::gaussian(vec![0.0, 0.0], vec![1.0, 0.2, 0.3, 1.0]).is_err());
        assert!(SyntheticTarget::sinh_arcsinh(vec![0.0], vec![0.0], vec![1.0]).is_err());
        assert!(SyntheticTarget::<f64>::sinh_arcsinh_2d(4).is_err());
    }

    #[test]
    fn five_d_fixtures_build() {
        for w in 1..=3 {
            let t = SyntheticTarget::<f64>::sinh_arcsinh_5d(w).unwrap();
            assert_eq!(t.dim(), 5);
            assert!(t.log_density(&[0.1; 5]).is_finite());
        }
    }
}
