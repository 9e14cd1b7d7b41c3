//! Fisher-divergence fitting as a minimum-eigenvalue problem.
//!
//! For samples `z^b` from a proposal `π`, the importance-weighted Fisher
//! divergence of `q = (Σ α_k Φ_k)²` from `p` equals `αᵀ M α` with
//!
//! ```text
//! u_k(z)  = 2 ∇Φ_k(z) − Φ_k(z) ∇log p(z)
//! M_jk    = Σ_b u_j(z^b) · u_k(z^b) / π(z^b)
//! ```
//!
//! so the optimal unit-norm `α` is the eigenvector of the smallest eigenvalue
//! of `M`. `M` is kept as the raw sum (no `1/B`); scaling does not move the
//! eigenvector.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::OfeDensity;
use crate::error::{Error, Result};
use crate::linalg::{inverse_iteration, symmetric_eigen, SymmetricMatrix};
use crate::product_basis::{PointTables, ProductBasis};
use crate::proposals::Proposal;
use crate::scalar::{norm2, Real};
use crate::target::ScoreTarget;

/// Samples per basis function used when the caller does not choose `B`.
pub const DEFAULT_SAMPLES_PER_BASIS: usize = 10;

pub fn default_batch_size(basis_size: usize) -> usize {
    DEFAULT_SAMPLES_PER_BASIS * basis_size
}

/// Unit-norm weight vector with a fixed sign: the first entry of largest
/// magnitude is nonnegative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector<T>(Vec<T>);

impl<T: Real> WeightVector<T> {
    /// Normalizes and canonicalizes the sign of `v`.
    pub fn new(v: Vec<T>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::Empty("weight vector"));
        }
        let n = norm2(&v);
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::InvalidParameter(
                "weight vector must be finite and nonzero".into(),
            ));
        }
        let mut w: Vec<T> = v.into_iter().map(|x| x / n).collect();
        canonicalize_sign(&mut w);
        Ok(Self(w))
    }

    /// Takes `v` as-is after checking it has unit norm to `tol`; no sign flip.
    pub fn from_unit(v: Vec<T>, tol: T) -> Result<Self> {
        let n = norm2(&v);
        if v.is_empty() || !((n - T::one()).abs() <= tol) {
            return Err(Error::InvalidParameter(format!("weight vector norm {n} is not 1")));
        }
        Ok(Self(v))
    }

    /// `K = 1`, `α = (1)`.
    pub fn unit_first(len: usize) -> Self {
        let mut v = vec![T::zero(); len.max(1)];
        v[0] = T::one();
        Self(v)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

fn canonicalize_sign<T: Real>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Proposal draws with their importance weights and target scores,
/// evaluated once and shared by every fit that uses the batch.
#[derive(Clone, Debug)]
pub struct ScoreCache<T> {
    dim: usize,
    points: Vec<Vec<T>>,
    inv_proposal: Vec<T>,
    scores: Vec<Vec<T>>,
    /// Position of each accepted sample in the drawn sequence.
    origin: Vec<usize>,
    drawn: usize,
    rejected: usize,
    score_time_ms: f64,
}

impl<T: Real> ScoreCache<T> {
    /// Draws `n` samples from `proposal` and evaluates the target score at each.
    pub fn draw<S, R>(target: &S, proposal: &Proposal<T>, n: usize, rng: &mut R) -> Result<Self>
    where
        S: ScoreTarget<T> + ?Sized,
        R: Rng + ?Sized,
    {
        let samples = proposal.sample(rng, n);
        Self::from_samples(target, proposal, samples)
    }

    /// Builds the cache from caller-supplied proposal samples. Samples with a
    /// non-finite score are dropped and counted.
    pub fn from_samples<S>(target: &S, proposal: &Proposal<T>, samples: Vec<Vec<T>>) -> Result<Self>
    where
        S: ScoreTarget<T> + ?Sized,
    {
        if samples.is_empty() {
            return Err(Error::Empty("sample batch"));
        }
        let dim = target.dim();
        if proposal.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: proposal.dim(),
            });
        }
        let start = Instant::now();
        let drawn = samples.len();
        let mut points = Vec::with_capacity(drawn);
        let mut inv_proposal = Vec::with_capacity(drawn);
        let mut scores = Vec::with_capacity(drawn);
        let mut origin = Vec::with_capacity(drawn);
        let mut rejected = 0;
        for (b, z) in samples.into_iter().enumerate() {
            let pi = proposal.density(&z)?;
            if !(pi > T::zero()) {
                return Err(Error::EstimatorUndefined { sample: b });
            }
            let s = target.score(&z);
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
            if s.iter().any(|x| !x.is_finite()) {
                rejected += 1;
                continue;
            }
            points.push(z);
            inv_proposal.push(pi.recip());
            scores.push(s);
            origin.push(b);
        }
        Ok(Self {
            dim,
            points,
            inv_proposal,
            scores,
            origin,
            drawn,
            rejected,
            score_time_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Accepted samples.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn drawn(&self) -> usize {
        self.drawn
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn scores(&self) -> &[Vec<T>] {
        &self.scores
    }

    /// `1/π(z^b)` for each accepted sample.
    pub fn weights(&self) -> &[T] {
        &self.inv_proposal
    }

    /// Wall time of the score evaluations that filled the cache.
    pub fn score_time_ms(&self) -> f64 {
        self.score_time_ms
    }

    /// The cache restricted to the first `n` drawn samples, without new
    /// score evaluations. The timing is carried over from the full draw.
    pub fn prefix(&self, n: usize) -> Self {
        let n = n.min(self.drawn);
        let keep = self.origin.partition_point(|&o| o < n);
        Self {
            dim: self.dim,
            points: self.points[..keep].to_vec(),
            inv_proposal: self.inv_proposal[..keep].to_vec(),
            scores: self.scores[..keep].to_vec(),
            origin: self.origin[..keep].to_vec(),
            drawn: n,
            rejected: n - keep,
            score_time_ms: self.score_time_ms,
        }
    }

    /// Errors if more than `max_fraction` of the drawn samples were rejected.
    pub fn check_rejections(&self, max_fraction: f64) -> Result<()> {
        let limit = (max_fraction * self.drawn as f64).floor() as usize;
        if self.rejected > limit {
            return Err(Error::TooManyRejected {
                rejected: self.rejected,
                total: self.drawn,
                limit,
            });
        }
        Ok(())
    }
}

/// `u_k(z) = 2∇Φ_k(z) − Φ_k(z) s` for a single point with score `s`,
/// written as `K × D` row-major into `out`.
fn features_at<T: Real>(basis: &ProductBasis, z: &[T], score: &[T], out: &mut [T], vals: &mut [T]) {
    let dim = basis.dim();
    let tables = PointTables::new(basis, z, true);
    tables.products(basis, vals);
    tables.product_grads(basis, out);
    let two = T::lit(2.0);
    for (k, &v) in vals.iter().enumerate() {
        let row = &mut out[k * dim..(k + 1) * dim];
        for (g, &s) in row.iter_mut().zip(score) {
            *g = two * *g - v * s;
        }
    }
}

/// Feature arrays `u(z^b)` (each `K × D`, row-major) for a batch of samples,
/// together with the indices of samples whose score was not finite.
#[derive(Clone, Debug)]
pub struct FeatureBatch<T> {
    pub features: Vec<Vec<T>>,
    pub rejected: Vec<usize>,
}

pub fn feature_vectors<S>(basis: &ProductBasis, target: &S, samples: &[Vec<f64>]) -> Result<FeatureBatch<f64>>
where
    S: ScoreTarget<f64> + ?Sized,
{
    feature_vectors_generic(basis, target, samples)
}

pub fn feature_vectors_generic<T, S>(basis: &ProductBasis, target: &S, samples: &[Vec<T>]) -> Result<FeatureBatch<T>>
where
    T: Real,
    S: ScoreTarget<T> + ?Sized,
{
    let k = basis.len();
    let mut vals = vec![T::zero(); k];
    let mut features = Vec::with_capacity(samples.len());
    let mut rejected = Vec::new();
    for (b, z) in samples.iter().enumerate() {
        basis.check_point(z)?;
        let s = target.score(z);
        if s.iter().any(|x| !x.is_finite()) {
            rejected.push(b);
            continue;
        }
        let mut u = vec![T::zero(); k * basis.dim()];
        features_at(basis, z, &s, &mut u, &mut vals);
        features.push(u);
    }
    Ok(FeatureBatch { features, rejected })
}

/// The symmetric PSD matrix of the quadratic form.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix<T> {
    pub matrix: SymmetricMatrix<T>,
    /// Number of samples summed into `matrix`.
    pub batch_size: usize,
}

impl<T: Real> MomentMatrix<T> {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn quadratic_form(&self, alpha: &[T]) -> T {
        self.matrix.quadratic_form(alpha)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    /// Samples per worker partial sum. Results are reproducible for a fixed
    /// chunk size regardless of thread count.
    pub chunk_size: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { chunk_size: 256 }
    }
}

/// Assembles `M` from a score cache.
pub fn assemble<T: Real>(
    basis: &ProductBasis,
    cache: &ScoreCache<T>,
    opts: AssemblyOptions,
) -> Result<MomentMatrix<T>> {
    if basis.dim() != cache.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: cache.dim(),
        });
    }
    for z in cache.points() {
        basis.check_point(z)?;
    }
    let k = basis.len();
    let dim = basis.dim();
    let chunk = opts.chunk_size.max(1);
    let idx: Vec<usize> = (0..cache.len()).collect();
    let partials: Vec<Vec<T>> = idx
        .par_chunks(chunk)
        .map(|block| {
            let mut acc = vec![T::zero(); k * k];
            let mut u = vec![T::zero(); k * dim];
            let mut vals = vec![T::zero(); k];
            for &b in block {
                features_at(basis, &cache.points[b], &cache.scores[b], &mut u, &mut vals);
                let w = cache.inv_proposal[b];
                for j in 0..k {
                    let uj = &u[j * dim..(j + 1) * dim];
                    for l in j..k {
                        let ul = &u[l * dim..(l + 1) * dim];
                        let mut d = T::zero();
                        for (&a, &c) in uj.iter().zip(ul) {
                            d += a * c;
                        }
                        acc[j * k + l] += w * d;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![T::zero(); k * k];
    for p in &partials {
        for (t, &v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    Ok(MomentMatrix {
        matrix: SymmetricMatrix::from_upper(k, &total)?,
        batch_size: cache.len(),
    })
}

/// Assembles `M` directly from a target, proposal, and sample set.
pub fn assemble_m<T, S>(
    basis: &ProductBasis,
    target: &S,
    proposal: &Proposal<T>,
    samples: Vec<Vec<T>>,
    opts: AssemblyOptions,
) -> Result<MomentMatrix<T>>
where
    T: Real,
    S: ScoreTarget<T> + ?Sized,
{
    let cache = ScoreCache::from_samples(target, proposal, samples)?;
    assemble(basis, &cache, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenPath {
    Dense,
    InverseIteration,
    /// Iterative solve did not converge; dense solve used instead.
    DenseFallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Largest `K` solved with the dense tridiagonal method.
    pub dense_limit: usize,
    /// Relative residual target for the iterative path.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            dense_limit: 2048,
            tolerance: 1e-10,
            max_iterations: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenSolution<T> {
    pub lambda_min: T,
    pub alpha: WeightVector<T>,
    pub path: EigenPath,
    /// `‖Mα − λα‖`.
    pub residual: T,
}

/// Smallest eigenvalue of `M` and its unit eigenvector, sign-canonicalized.
pub fn min_eigenpair<T: Real>(m: &MomentMatrix<T>, opts: EigenOptions) -> Result<EigenSolution<T>> {
    let mat = &m.matrix;
    if !mat.is_finite() {
        return Err(Error::NonFinite);
    }
    if mat.n() == 0 {
        return Err(Error::Empty("moment matrix"));
    }
    let dense = || -> Result<(T, Vec<T>)> {
        let eig = symmetric_eigen(mat)?;
        Ok((eig.values[0], eig.vector(0)))
    };
    let (lambda, v, path) = if mat.n() <= opts.dense_limit {
        let (l, v) = dense()?;
        (l, v, EigenPath::Dense)
    } else {
        match inverse_iteration(mat, T::lit(opts.tolerance), opts.max_iterations) {
            Some((l, v)) => (l, v, EigenPath::InverseIteration),
            None => {
                let (l, v) = dense()?;
                (l, v, EigenPath::DenseFallback)
            }
        }
    };
    let alpha = WeightVector::new(v)?;
    let mv = mat.mul_vec(alpha.as_slice());
    let residual = mv
        .iter()
        .zip(alpha.as_slice())
        .map(|(&a, &b)| (a - lambda * b) * (a - lambda * b))
        .sum::<T>()
        .sqrt();
    Ok(EigenSolution {
        lambda_min: lambda,
        alpha,
        path,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub assembly: AssemblyOptions,
    pub eigen: EigenOptions,
    /// Fraction of drawn samples allowed to have a non-finite score.
    pub max_reject_fraction: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            assembly: AssemblyOptions::default(),
            eigen: EigenOptions::default(),
            max_reject_fraction: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub lambda_min: f64,
    pub basis_size: usize,
    /// Samples drawn from the proposal.
    pub batch_size: usize,
    pub rejected: usize,
    pub eigen_path: EigenPath,
    pub eigen_residual: f64,
    pub score_eval_ms: f64,
    pub assembly_ms: f64,
    pub eigensolve_ms: f64,
    pub warnings: Vec<String>,
}

/// Draws `batch_size` proposal samples, evaluates scores once, and fits.
pub fn fit<T, S, R>(
    basis: &ProductBasis,
    target: &S,
    proposal: &Proposal<T>,
    batch_size: usize,
    rng: &mut R,
    opts: FitOptions,
) -> Result<(OfeDensity<T>, FitDiagnostics)>
where
    T: Real,
    S: ScoreTarget<T> + ?Sized,
    R: Rng + ?Sized,
{
    let cache = ScoreCache::draw(target, proposal, batch_size, rng)?;
    fit_cached(basis, &cache, opts)
}

/// Fits from an existing score cache; any number of bases may share one cache.
pub fn fit_cached<T: Real>(
    basis: &ProductBasis,
    cache: &ScoreCache<T>,
    opts: FitOptions,
) -> Result<(OfeDensity<T>, FitDiagnostics)> {
    cache.check_rejections(opts.max_reject_fraction)?;
    let mut warnings = Vec::new();
    if cache.drawn() < basis.len() {
        warnings.push(format!(
            "batch size {} is smaller than the basis size {}",
            cache.drawn(),
            basis.len()
        ));
    }
    if cache.rejected() > 0 {
        warnings.push(format!("{} samples dropped for non-finite scores", cache.rejected()));
    }
    let t0 = Instant::now();
    let m = assemble(basis, cache, opts.assembly)?;
    let t1 = Instant::now();
    let sol = min_eigenpair(&m, opts.eigen)?;
    let t2 = Instant::now();
    let norm = m.matrix.frobenius_norm();
    if sol.residual > T::lit(1e-8) * norm {
        warnings.push(format!("eigen residual {} exceeds 1e-8·‖M‖", sol.residual));
    }
    let diagnostics = FitDiagnostics {
        lambda_min: sol.lambda_min.as_f64(),
        basis_size: basis.len(),
        batch_size: cache.drawn(),
        rejected: cache.rejected(),
        eigen_path: sol.path,
        eigen_residual: sol.residual.as_f64(),
        score_eval_ms: cache.score_time_ms(),
        assembly_ms: (t1 - t0).as_secs_f64() * 1e3,
        eigensolve_ms: (t2 - t1).as_secs_f64() * 1e3,
        warnings,
    };
    Ok((OfeDensity::new(basis.clone(), sol.alpha)?, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis1d::BasisFamily;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct StdNormal(usize);
    impl ScoreTarget<f64> for StdNormal {
        fn dim(&self) -> usize {
            self.0
        }
        fn log_density(&self, z: &[f64]) -> f64 {
            -0.5 * z.iter().map(|x| x * x).sum::<f64>()
        }
        fn score(&self, z: &[f64]) -> Vec<f64> {
            z.iter().map(|x| -x).collect()
        }
    }

    #[test]
    fn lowest_mode_features_vanish() {
        let b = ProductBasis::uniform(BasisFamily::hermite(), 1, 1).unwrap();
        let fb = feature_vectors(&b, &StdNormal(1), &[vec![-2.3], vec![0.4], vec![1.9]]).unwrap();
        for u in fb.features {
            assert_eq!(u, vec![0.0]);
        }
    }

    #[test]
    fn second_mode_feature_value() {
        let b = ProductBasis::uniform(BasisFamily::hermite(), 1, 2).unwrap();
        let fb = feature_vectors(&b, &StdNormal(1), &[vec![1.0]]).unwrap();
        let phi1 = BasisFamily::hermite().eval(1, 1.0).unwrap();
        assert_relative_eq!(fb.features[0][1], 2.0 * phi1, max_relative = 1e-14);
        assert_relative_eq!(fb.features[0][1], 0.9838, epsilon = 1e-4);
    }

    #[test]
    fn non_finite_scores_are_rejected() {
        struct Bad;
        impl ScoreTarget<f64> for Bad {
            fn dim(&self) -> usize {
                1
            }
            fn log_density(&self, _: &[f64]) -> f64 {
                0.0
            }
            fn score(&self, z: &[f64]) -> Vec<f64> {
                vec![if z[0] > 0.0 { f64::NAN } else { -z[0] }]
            }
        }
        let b = ProductBasis::uniform(BasisFamily::hermite(), 1, 2).unwrap();
        let fb = feature_vectors(&b, &Bad, &[vec![-1.0], vec![1.0]]).unwrap();
        assert_eq!(fb.rejected, vec![1]);
        let p = Proposal::centered_box(1, 3.0).unwrap();
        let cache = ScoreCache::from_samples(&Bad, &p, vec![vec![-1.0], vec![1.0]]).unwrap();
        assert_eq!(cache.rejected(), 1);
        assert!(matches!(
            fit_cached(&b, &cache, FitOptions::default()),
            Err(Error::TooManyRejected { .. })
        ));
        let head = cache.prefix(1);
        assert_eq!((head.len(), head.drawn(), head.rejected()), (1, 1, 0));
        let all = cache.prefix(10);
        assert_eq!((all.len(), all.drawn(), all.rejected()), (1, 2, 1));
    }

    #[test]
    fn zero_proposal_density_is_an_error() {
        let p = Proposal::centered_box(1, 1.0).unwrap();
        let err = ScoreCache::from_samples(&StdNormal(1), &p, vec![vec![0.0], vec![2.0]]).unwrap_err();
        assert_eq!(err, Error::EstimatorUndefined { sample: 1 });
    }

    #[test]
    fn k1_gaussian_matrix_is_zero() {
        let b = ProductBasis::uniform(BasisFamily::hermite(), 1, 1).unwrap();
        let p = Proposal::centered_box(1, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = assemble_m(
            &b,
            &StdNormal(1),
            &p,
            p.sample(&mut rng, 50),
            AssemblyOptions::default(),
        )
        .unwrap();
        assert_eq!(m.matrix.as_slice(), &[0.0]);
    }

    #[test]
    fn duplicating_batch_doubles_matrix() {
        let b = ProductBasis::uniform(BasisFamily::hermite(), 2, 3).unwrap();
        let p = Proposal::centered_box(2, 4.0).unwrap();
        let target = crate::targets::SyntheticTarget::<f64>::funnel(1.2).unwrap();
        let s = p.sample(&mut ChaCha8Rng::seed_from_u64(5), 64);
        let opts = AssemblyOptions { chunk_size: 64 };
        let m1 = assemble_m(&b, &target, &p, s.clone(), opts).unwrap();
        let mut s2 = s.clone();
        s2.extend(s);
        let m2 = assemble_m(&b, &target, &p, s2, AssemblyOptions { chunk_size: 64 }).unwrap();
        for (a, c) in m1.matrix.as_slice().iter().zip(m2.matrix.as_slice()) {
            assert_eq!(2.0 * a, *c);
        }
    }

    #[test]
    fn chunking_is_thread_count_independent() {
        let b = ProductBasis::uniform(BasisFamily::hermite(), 2, 3).unwrap();
        let p = Proposal::centered_box(2, 4.0).unwrap();
        let target = crate::targets::SyntheticTarget::<f64>::funnel(1.2).unwrap();
        let cache = ScoreCache::draw(&target, &p, 1000, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let opts = AssemblyOptions { chunk_size: 37 };
        let a = assemble(&b, &cache, opts).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| assemble(&b, &cache, opts)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn eigen_examples() {
        let m = MomentMatrix {
            matrix: SymmetricMatrix::<f64>::identity(3),
            batch_size: 0,
        };
        let sol = min_eigenpair(&m, EigenOptions::default()).unwrap();
        assert_relative_eq!(sol.lambda_min, 1.0);
        assert!(sol.residual < 1e-12);
        let m = MomentMatrix {
            matrix: SymmetricMatrix::from_diagonal(&[3.0, 1.0, 2.0]),
            batch_size: 0,
        };
        let sol = min_eigenpair(&m, EigenOptions::default()).unwrap();
        assert_eq!(sol.lambda_min, 1.0);
        assert_eq!(sol.alpha.as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(sol.path, EigenPath::Dense);
    }

    #[test]
    fn iterative_path_runs_above_dense_limit() {
        let m = MomentMatrix {
            matrix: SymmetricMatrix::from_diagonal(&[3.0, 0.5, 2.0, 4.0]),
            batch_size: 0,
        };
        let opts = EigenOptions {
            dense_limit: 2,
            ..EigenOptions::default()
        };
        let sol = min_eigenpair(&m, opts).unwrap();
        assert_eq!(sol.path, EigenPath::InverseIteration);
        assert_relative_eq!(sol.lambda_min, 0.5, epsilon = 1e-12);
        assert_relative_eq!(sol.alpha.as_slice()[1], 1.0, epsilon = 1e-9);
        // no iterations allowed: falls back to the dense solve
        let opts = EigenOptions {
            dense_limit: 2,
            max_iterations: 0,
            ..EigenOptions::default()
        };
        let sol = min_eigenpair(&m, opts).unwrap();
        assert_eq!(sol.path, EigenPath::DenseFallback);
        assert_eq!(sol.lambda_min, 0.5);
    }

    #[test]
    fn weight_vector_sign_convention() {
        let w = WeightVector::new(vec![0.3, -0.8, 0.8]).unwrap();
        assert!(w.as_slice()[1] > 0.0);
        assert_relative_eq!(norm2(w.as_slice()), 1.0, epsilon = 1e-15);
        assert!(WeightVector::<f64>::new(vec![0.0, 0.0]).is_err());
        assert!(WeightVector::from_unit(vec![0.6, 0.8], 1e-12).is_ok());
        assert!(WeightVector::from_unit(vec![0.6, 0.9], 1e-12).is_err());
    }

    #[test]
    fn small_batch_warns() {
        let b = ProductBasis::uniform(BasisFamily::hermite(), 1, 5).unwrap();
        let p = Proposal::centered_box(1, 4.0).unwrap();
        let (_, diag) = fit(
            &b,
            &StdNormal(1),
            &p,
            3,
            &mut ChaCha8Rng::seed_from_u64(1),
            FitOptions::default(),
        )
        .unwrap();
        assert!(diag.warnings.iter().any(|w| w.contains("smaller than the basis size")));
    }

    #[test]
    fn standard_gaussian_fit_single_precision() {
        struct StdNormal32;
        impl ScoreTarget<f32> for StdNormal32 {
            fn dim(&self) -> usize {
                1
            }
            fn log_density(&self, z: &[f32]) -> f32 {
                -0.5 * z[0] * z[0]
            }
            fn score(&self, z: &[f32]) -> Vec<f32> {
                vec![-z[0]]
            }
        }
        let b = ProductBasis::uniform(BasisFamily::hermite(), 1, 4).unwrap();
        let p = Proposal::<f32>::centered_box(1, 5.0).unwrap();
        let (q, diag) = fit(
            &b,
            &StdNormal32,
            &p,
            200,
            &mut ChaCha8Rng::seed_from_u64(4),
            FitOptions::default(),
        )
        .unwrap();
        assert!(diag.lambda_min.abs() < 1e-3);
        assert!((q.alpha().as_slice()[0] - 1.0).abs() < 1e-3);
    }
}
