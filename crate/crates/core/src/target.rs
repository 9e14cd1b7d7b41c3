//! The interface a distribution must expose to be fitted: an unnormalized
//! log-density and its gradient.

use crate::scalar::Real;

/// Log-density known up to an additive constant, plus its score `∇ log p`.
pub trait ScoreTarget<T: Real>: Sync {
    fn dim(&self) -> usize;

    /// `log p(z)` up to a constant offset.
    fn log_density(&self, z: &[T]) -> T;

    /// `∇ log p(z)`; must be the gradient of [`ScoreTarget::log_density`].
    fn score(&self, z: &[T]) -> Vec<T>;
}

impl<T: Real, S: ScoreTarget<T> + ?Sized> ScoreTarget<T> for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, z: &[T]) -> T {
        (**self).log_density(z)
    }
    fn score(&self, z: &[T]) -> Vec<T> {
        (**self).score(z)
    }
}

impl<T: Real, S: ScoreTarget<T> + ?Sized + Send> ScoreTarget<T> for Box<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, z: &[T]) -> T {
        (**self).log_density(z)
    }
    fn score(&self, z: &[T]) -> Vec<T> {
        (**self).score(z)
    }
}

/// Wraps a target and counts score evaluations.
#[derive(Debug)]
pub struct CountingTarget<S> {
    inner: S,
    scores: std::sync::atomic::AtomicUsize,
}

impl<S> CountingTarget<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            scores: std::sync::atomic::AtomicUsize::new(0),
        }
    }

    pub fn score_evaluations(&self) -> usize {
        self.scores.load(std::sync::atomic::Ordering::Relaxed)
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<T: Real, S: ScoreTarget<T>> ScoreTarget<T> for CountingTarget<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn log_density(&self, z: &[T]) -> T {
        self.inner.log_density(z)
    }
    fn score(&self, z: &[T]) -> Vec<T> {
        self.scores.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        self.inner.score(z)
    }
}
