//! Affine standardization `z̃ = L⁻¹(z − μ)` with `L` the lower Cholesky
//! factor of a covariance estimate.
//!
//! A target is fitted in standardized coordinates and the fitted density is
//! pulled back with the Jacobian factor `1/|det L|`. Because `L` is lower
//! triangular, the first `r` standardized coordinates depend only on the
//! first `r` original ones, so prefix marginals survive the change of
//! variables.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::density::OfeDensity;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, mul_lower, mul_lower_transpose, solve_lower};
use crate::proposals::Proposal;
use crate::scalar::{log_sum_exp, Real};
use crate::target::ScoreTarget;

/// Relative ridge added to the covariance diagonal before factoring.
pub const COVARIANCE_RIDGE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransformRepr<T>", into = "TransformRepr<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct StandardizingTransform<T> {
    mu: Vec<T>,
    /// Row-major lower-triangular `L` with `Σ = L Lᵀ`.
    l: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct TransformRepr<T> {
    mean: Vec<T>,
    /// Rows of `L`; entries above the diagonal must be zero.
    cholesky_factor: Vec<Vec<T>>,
}

impl<T: Real> TryFrom<TransformRepr<T>> for StandardizingTransform<T> {
    type Error = Error;
    fn try_from(r: TransformRepr<T>) -> Result<Self> {
        let d = r.mean.len();
        if r.cholesky_factor.len() != d || r.cholesky_factor.iter().any(|row| row.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.cholesky_factor.len(),
            });
        }
        Self::from_cholesky(r.mean, r.cholesky_factor.concat())
    }
}

impl<T: Real> From<StandardizingTransform<T>> for TransformRepr<T> {
    fn from(t: StandardizingTransform<T>) -> Self {
        let d = t.dim();
        TransformRepr {
            cholesky_factor: t.l.chunks(d).map(<[T]>::to_vec).collect(),
            mean: t.mu,
        }
    }
}

impl<T: Real> StandardizingTransform<T> {
    pub fn identity(dim: usize) -> Self {
        let mut l = vec![T::zero(); dim * dim];
        for i in 0..dim {
            l[i * dim + i] = T::one();
        }
        Self {
            mu: vec![T::zero(); dim],
            l,
        }
    }

    /// From a location and a row-major covariance matrix.
    pub fn from_mean_cov(mu: Vec<T>, cov: &[T]) -> Result<Self> {
        let d = mu.len();
        if d == 0 {
            return Err(Error::Empty("transform dimensions"));
        }
        if cov.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: cov.len(),
            });
        }
        let l = cholesky(cov, d)?;
        Ok(Self { mu, l })
    }

    /// From a location and a row-major lower-triangular factor.
    pub fn from_cholesky(mu: Vec<T>, l: Vec<T>) -> Result<Self> {
        let d = mu.len();
        if d == 0 {
            return Err(Error::Empty("transform dimensions"));
        }
        if l.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: l.len(),
            });
        }
        for i in 0..d {
            if !(l[i * d + i] > T::zero()) || !l[i * d + i].is_finite() {
                return Err(Error::InvalidParameter(
                    "Cholesky factor needs a positive diagonal".into(),
                ));
            }
            if l[i * d + i + 1..(i + 1) * d].iter().any(|&x| x != T::zero()) {
                return Err(Error::InvalidParameter(
                    "Cholesky factor must be lower triangular".into(),
                ));
            }
        }
        Ok(Self { mu, l })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mean(&self) -> &[T] {
        &self.mu
    }

    pub fn cholesky_factor(&self) -> &[T] {
        &self.l
    }

    /// `L Lᵀ`, row-major.
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

    /// `z̃ = L⁻¹(z − μ)`.
    pub fn to_standard(&self, z: &[T]) -> Vec<T> {
        let centered: Vec<T> = z.iter().zip(&self.mu).map(|(&a, &m)| a - m).collect();
        solve_lower(&self.l, self.dim(), &centered)
    }

    /// `z = L z̃ + μ`.
    pub fn from_standard(&self, zt: &[T]) -> Vec<T> {
        mul_lower(&self.l, self.dim(), zt)
            .into_iter()
            .zip(&self.mu)
            .map(|(a, &m)| a + m)
            .collect()
    }

    /// `log |det L|`.
    pub fn log_abs_det(&self) -> T {
        let d = self.dim();
        (0..d).map(|i| self.l[i * d + i].ln()).sum()
    }

    /// Transform restricted to the first `r` coordinates.
    pub fn leading(&self, r: usize) -> Self {
        let d = self.dim();
        let mut l = Vec::with_capacity(r * r);
        for i in 0..r {
            l.extend_from_slice(&self.l[i * d..i * d + r]);
        }
        Self {
            mu: self.mu[..r].to_vec(),
            l,
        }
    }

    /// Maps a standardized-coordinate gradient `g̃` to original coordinates: `L⁻ᵀ g̃`.
    pub(crate) fn pull_gradient(&self, gt: &[T]) -> Vec<T> {
        crate::linalg::solve_lower_transpose(&self.l, self.dim(), gt)
    }

    /// Maps an original-coordinate gradient `g` to standardized ones: `Lᵀ g`.
    pub(crate) fn push_gradient(&self, g: &[T]) -> Vec<T> {
        mul_lower_transpose(&self.l, self.dim(), g)
    }
}

/// Self-normalized importance-sampling moments of a target.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMoments<T> {
    pub mean: Vec<T>,
    /// Row-major covariance.
    pub covariance: Vec<T>,
    /// Kish effective sample size of the normalized weights.
    pub effective_sample_size: T,
}

/// Mean and covariance of `p` from proposal draws with weights `ρ(z)/π(z)`.
pub fn importance_moments<T, S, R>(
    target: &S,
    proposal: &Proposal<T>,
    n: usize,
    rng: &mut R,
) -> Result<WeightedMoments<T>>
where
    T: Real,
    S: ScoreTarget<T> + ?Sized,
    R: Rng + ?Sized,
{
    let d = target.dim();
    if proposal.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: proposal.dim(),
        });
    }
    if n == 0 {
        return Err(Error::Empty("importance sample"));
    }
    let samples = proposal.sample(rng, n);
    let mut logw = Vec::with_capacity(n);
    for z in &samples {
        let lw = target.log_density(z) - proposal.log_density(z)?;
        logw.push(if lw.is_nan() { T::neg_infinity() } else { lw });
    }
    let lse = log_sum_exp(&logw);
    if !lse.is_finite() {
        return Err(Error::InvalidParameter("all importance weights vanish".into()));
    }
    let w: Vec<T> = logw.iter().map(|&lw| (lw - lse).exp()).collect();
    let mut mean = vec![T::zero(); d];
    for (z, &wi) in samples.iter().zip(&w) {
        for (m, &zd) in mean.iter_mut().zip(z) {
            *m += wi * zd;
        }
    }
    let mut cov = vec![T::zero(); d * d];
    for (z, &wi) in samples.iter().zip(&w) {
        for i in 0..d {
            let di = z[i] - mean[i];
            for j in 0..=i {
                cov[i * d + j] += wi * di * (z[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[j * d + i] = cov[i * d + j];
        }
    }
    let ess = w.iter().map(|&x| x * x).sum::<T>().recip();
    Ok(WeightedMoments {
        mean,
        covariance: cov,
        effective_sample_size: ess,
    })
}

/// Estimates `(μ, L)` for `target` by self-normalized importance sampling
/// from `proposal`, with a small ridge on the covariance diagonal.
pub fn estimate_transform<T, S, R>(
    target: &S,
    proposal: &Proposal<T>,
    n: usize,
    rng: &mut R,
) -> Result<StandardizingTransform<T>>
where
    T: Real,
    S: ScoreTarget<T> + ?Sized,
    R: Rng + ?Sized,
{
    let mut m = importance_moments(target, proposal, n, rng)?;
    let d = m.mean.len();
    let trace: T = (0..d).map(|i| m.covariance[i * d + i]).sum();
    let ridge = T::lit(COVARIANCE_RIDGE) * trace / T::from_usize_lossy(d);
    for i in 0..d {
        m.covariance[i * d + i] += ridge;
    }
    StandardizingTransform::from_mean_cov(m.mean, &m.covariance)
}

/// The target seen in standardized coordinates:
/// `log p̃(z̃) = log p(L z̃ + μ) + log|det L|`, `∇ log p̃ = Lᵀ ∇log p`.
#[derive(Clone, Debug)]
pub struct StandardizedTarget<S, T> {
    inner: S,
    transform: StandardizingTransform<T>,
}

impl<S, T: Real> StandardizedTarget<S, T> {
    pub fn transform(&self) -> &StandardizingTransform<T> {
        &self.transform
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<T: Real, S: ScoreTarget<T>> ScoreTarget<T> for StandardizedTarget<S, T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn log_density(&self, zt: &[T]) -> T {
        self.inner.log_density(&self.transform.from_standard(zt)) + self.transform.log_abs_det()
    }

    fn score(&self, zt: &[T]) -> Vec<T> {
        let g = self.inner.score(&self.transform.from_standard(zt));
        self.transform.push_gradient(&g)
    }
}

pub fn push_target<T: Real, S: ScoreTarget<T>>(
    target: S,
    transform: StandardizingTransform<T>,
) -> Result<StandardizedTarget<S, T>> {
    if target.dim() != transform.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: transform.dim(),
        });
    }
    Ok(StandardizedTarget {
        inner: target,
        transform,
    })
}

/// Attaches `transform` to a density fitted in standardized coordinates.
pub fn pull_density<T: Real>(qtilde: OfeDensity<T>, transform: StandardizingTransform<T>) -> Result<OfeDensity<T>> {
    qtilde.with_transform(transform)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::targets::SyntheticTarget;

    #[test]
    fn roundtrip_is_identity() {
        let t = StandardizingTransform::<f64>::from_mean_cov(vec![1.0, -2.0], &[2.0, 0.3, 0.3, 0.5]).unwrap();
        let z = [0.7, 1.1];
        let back = t.from_standard(&t.to_standard(&z));
        for (a, b) in back.iter().zip(&z) {
            assert!((a - b).abs() < 1e-12);
        }
        let cov = t.covariance();
        assert_relative_eq!(cov[1], 0.3, epsilon = 1e-15);
        assert_relative_eq!(cov[3], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn invalid_factors() {
        assert!(StandardizingTransform::from_cholesky(vec![0.0], vec![0.0]).is_err());
        assert!(StandardizingTransform::from_cholesky(vec![0.0, 0.0], vec![1.0, 0.5, 0.0, 1.0]).is_err());
        assert_eq!(
            StandardizingTransform::from_mean_cov(vec![0.0, 0.0], &[1.0, 2.0, 2.0, 1.0]),
            Err(Error::NotPositiveDefinite)
        );
    }

    #[test]
    fn exact_standardization_gives_standard_normal() {
        let cov = [2.0, 0.4, 0.4, 0.7];
        let mean = vec![1.0, -3.0];
        let g = SyntheticTarget::<f64>::gaussian(mean.clone(), cov.to_vec()).unwrap();
        let t = StandardizingTransform::from_mean_cov(mean, &cov).unwrap();
        let pushed = push_target(g, t).unwrap();
        assert_eq!(
            pushed
                .score(&[0.0, 0.0])
                .iter()
                .map(|x| x.abs() < 1e-14)
                .collect::<Vec<_>>(),
            vec![true, true]
        );
        let z = [0.3, -1.2];
        let expected = -0.5 * (z[0] * z[0] + z[1] * z[1]) - (2.0 * std::f64::consts::PI).ln();
        assert_relative_eq!(pushed.log_density(&z), expected, max_relative = 1e-13);
        let s = pushed.score(&z);
        assert_relative_eq!(s[0], -z[0], max_relative = 1e-12);
        assert_relative_eq!(s[1], -z[1], max_relative = 1e-12);
    }

    #[test]
    fn identity_push_is_noop() {
        let f = SyntheticTarget::<f64>::funnel(1.2).unwrap();
        let pushed = push_target(f.clone(), StandardizingTransform::identity(2)).unwrap();
        let z = [0.4, -0.9];
        assert_eq!(pushed.log_density(&z), f.log_density(&z));
        assert_eq!(pushed.score(&z), f.score(&z));
    }

    #[test]
    fn pushed_score_matches_finite_differences() {
        let f = SyntheticTarget::<f64>::funnel(1.2).unwrap();
        let t = StandardizingTransform::from_mean_cov(vec![0.2, 0.5], &[1.1, 0.2, 0.2, 2.0]).unwrap();
        let pushed = push_target(f, t).unwrap();
        let z = [0.3, -0.4];
        let s = pushed.score(&z);
        let h = 1e-6;
        for d in 0..2 {
            let mut a = z;
            let mut b = z;
            a[d] += h;
            b[d] -= h;
            let fd = (pushed.log_density(&a) - pushed.log_density(&b)) / (2.0 * h);
            assert!((fd - s[d]).abs() <= 1e-6 * (1.0 + s[d].abs()));
        }
    }

    #[test]
    fn estimate_recovers_gaussian_moments() {
        let g = SyntheticTarget::<f64>::gaussian(vec![3.0], vec![0.125]).unwrap();
        let p = Proposal::centered_box(1, 6.0).unwrap();
        let n = 200_000;
        let m = importance_moments(&g, &p, n, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let ess = m.effective_sample_size;
        let sd = 0.125f64.sqrt();
        // standard errors of the mean and of the sd under the effective sample size
        assert!((m.mean[0] - 3.0).abs() < 3.0 * sd / ess.sqrt());
        let t = estimate_transform(&g, &p, n, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let l = t.cholesky_factor()[0];
        assert!((l - sd).abs() < 3.0 * sd / (2.0 * ess).sqrt(), "L = {l}");
    }

    #[test]
    fn estimate_standard_gaussian() {
        let g = SyntheticTarget::<f64>::gaussian(vec![0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let p = Proposal::isotropic_gaussian(vec![0.0, 0.0], 1.0).unwrap();
        let t = estimate_transform(&g, &p, 100_000, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        for (i, &v) in t.cholesky_factor().iter().enumerate() {
            let expected = if i == 0 || i == 3 { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 0.02);
        }
        assert!(t.mean().iter().all(|m| m.abs() < 0.02));
    }

    #[test]
    fn serde_roundtrip() {
        let t = StandardizingTransform::from_mean_cov(vec![1.0, -2.0], &[2.0, 0.3, 0.3, 0.5]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: StandardizingTransform<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
    }
}
