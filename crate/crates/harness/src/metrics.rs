//! Divergences between a target and a fitted density.

use eigenvi_core::{ExactTarget, OfeDensity, ScoreTarget};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Monte Carlo mean with its standard error. `excluded` counts samples
/// dropped because a term was not finite (zeros or poles of `q`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub used: usize,
    pub excluded: usize,
}

fn summarize(terms: &[f64], excluded: usize) -> Result<Estimate> {
    let n = terms.len();
    if n == 0 {
        return Err(HarnessError::Metric(format!("all {excluded} terms were excluded")));
    }
    let mean = terms.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(Estimate {
        value: mean,
        stderr,
        used: n,
        excluded,
    })
}

/// `KL(p‖q) ≈ (1/n) Σ [log p(z) − log q(z)]` with `z ∼ p`; `p` must be normalized.
pub fn forward_kl<P, R>(p: &P, q: &OfeDensity<f64>, n: usize, rng: &mut R) -> Result<Estimate>
where
    P: ExactTarget<f64>,
    R: Rng + ?Sized,
{
    if n == 0 {
        return Err(HarnessError::Metric("forward KL needs at least one sample".into()));
    }
    let samples = p.sample(rng, n)?;
    forward_kl_from_samples(p, q, &samples)
}

/// Forward KL over caller-supplied draws from `p`.
pub fn forward_kl_from_samples<P>(p: &P, q: &OfeDensity<f64>, samples: &[Vec<f64>]) -> Result<Estimate>
where
    P: ScoreTarget<f64> + ?Sized,
{
    if samples.is_empty() {
        return Err(HarnessError::Metric("forward KL needs at least one sample".into()));
    }
    let mut terms = Vec::with_capacity(samples.len());
    let mut excluded = 0;
    for z in samples {
        let lq = q.log_density(z).unwrap_or(f64::NEG_INFINITY);
        let t = p.log_density(z) - lq;
        if t.is_finite() {
            terms.push(t);
        } else {
            excluded += 1;
        }
    }
    summarize(&terms, excluded)
}

/// `(1/S) Σ ‖∇log p(z) − ∇log q(z)‖²` over reference draws from the target.
pub fn fisher_divergence_empirical<S>(target: &S, q: &OfeDensity<f64>, samples: &[Vec<f64>]) -> Result<Estimate>
where
    S: ScoreTarget<f64> + ?Sized,
{
    if samples.is_empty() {
        return Err(HarnessError::Metric("Fisher divergence needs reference samples".into()));
    }
    let mut terms = Vec::with_capacity(samples.len());
    let mut excluded = 0;
    for z in samples {
        let Ok(sq) = q.score(z) else {
            excluded += 1;
            continue;
        };
        let sp = target.score(z);
        let t: f64 = sp.iter().zip(&sq).map(|(a, b)| (a - b) * (a - b)).sum();
        if t.is_finite() {
            terms.push(t);
        } else {
            excluded += 1;
        }
    }
    summarize(&terms, excluded)
}
