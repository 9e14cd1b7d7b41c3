//! Variational inference by score matching over squared orthogonal-function
//! expansions.
//!
//! A variational density has the form `q(z) = (Σ_k α_k Φ_k(z))²` with an
//! orthonormal product basis `Φ_k` and `‖α‖ = 1`. Fitting draws a batch from a
//! proposal, evaluates the target score once per draw, assembles a symmetric
//! PSD matrix `M` and returns its minimum eigenvector as `α`.
//!
//! ```
//! use eigenvi_core::{fit, BasisFamily, FitOptions, ProductBasis, Proposal, SyntheticTarget};
//! use rand::SeedableRng;
//!
//! let target = SyntheticTarget::<f64>::gaussian(vec![0.0], vec![1.0]).unwrap();
//! let basis = ProductBasis::uniform(BasisFamily::hermite(), 1, 1).unwrap();
//! let proposal = Proposal::centered_box(1, 6.0).unwrap();
//! let mut rng = rand::rngs::StdRng::seed_from_u64(7);
//! let (q, diag) = fit(&basis, &target, &proposal, 100, &mut rng, FitOptions::default()).unwrap();
//! assert!(diag.lambda_min < 1e-12);
//! assert!((q.density(&[0.0]).unwrap() - 0.3989422804014327).abs() < 1e-12);
//! ```
//!
//! Every numeric routine is generic over [`Real`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below name the common instantiations.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod basis1d;
pub mod density;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod product_basis;
pub mod proposals;
pub mod quadrature;
pub mod scalar;
pub mod standardize;
pub mod target;
pub mod targets;

pub use basis1d::{BasisFamily, BasisKind, Support};
pub use density::{sampling::conditional_coefficients, CdfGrid, CdfTable, Moments, OfeDensity, SampleBatch, Sampler};
pub use error::{Error, Result};
pub use estimator::{
    assemble, assemble_m, fit, fit_cached, min_eigenpair, AssemblyOptions, EigenOptions, EigenPath, FitDiagnostics,
    FitOptions, MomentMatrix, ScoreCache, WeightVector,
};
pub use linalg::SymmetricMatrix;
pub use product_basis::ProductBasis;
pub use proposals::Proposal;
pub use scalar::Real;
pub use standardize::{estimate_transform, pull_density, push_target, StandardizedTarget, StandardizingTransform};
pub use target::{CountingTarget, ScoreTarget};
pub use targets::{ExactTarget, SyntheticTarget};

pub type Density64 = OfeDensity<f64>;
pub type Density32 = OfeDensity<f32>;
pub type Proposal64 = Proposal<f64>;
pub type Proposal32 = Proposal<f32>;
pub type Target64 = SyntheticTarget<f64>;
pub type Target32 = SyntheticTarget<f32>;
pub type Transform64 = StandardizingTransform<f64>;
pub type Transform32 = StandardizingTransform<f32>;
pub type ScoreCache64 = ScoreCache<f64>;
pub type ScoreCache32 = ScoreCache<f32>;
