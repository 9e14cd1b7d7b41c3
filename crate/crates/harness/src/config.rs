//! Experiment configuration: a versioned JSON document.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "seed": 17,
//!   "target": { "kind": "fixture", "name": "mixture_2d" },
//!   "basis": { "family": "hermite_weighted", "orders": [3, 6, 10] },
//!   "proposal": { "kind": "uniform_box", "half_width": 9.0 },
//!   "batch": { "per_basis": [10, 20] },
//!   "output": { "dir": "out/mixture" }
//! }
//! ```

use std::path::{Path, PathBuf};

use eigenvi_core::{BasisFamily, BasisKind, ProductBasis, Proposal, StandardizingTransform, SyntheticTarget};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Required; every random stream of a run derives from it.
    pub seed: u64,
    pub target: TargetSpec,
    pub basis: BasisSpec,
    #[serde(default)]
    pub proposal: ProposalSpec,
    #[serde(default)]
    pub batch: BatchSpec,
    #[serde(default)]
    pub standardization: StandardizationSpec,
    #[serde(default)]
    pub evaluation: EvaluationSpec,
    #[serde(default)]
    pub execution: ExecutionSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Gaussian {
        mean: Vec<f64>,
        /// Rows of the covariance matrix.
        cov: Vec<Vec<f64>>,
    },
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covs: Vec<Vec<Vec<f64>>>,
    },
    Funnel {
        #[serde(default = "default_funnel_variance")]
        sigma2: f64,
    },
    Cross,
    SinhArcsinh {
        s: Vec<f64>,
        tau: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    /// Named parameter sets: `mixture_2d`, `funnel_2d`, `cross_2d`,
    /// `bimodal_1d`, `sinh_arcsinh_2d_{1,2,3}`, `sinh_arcsinh_5d_{1,2,3}`.
    Fixture {
        name: String,
    },
}

fn default_funnel_variance() -> f64 {
    1.2
}

fn flatten_rows(rows: &[Vec<f64>], d: usize, what: &str) -> Result<Vec<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(HarnessError::Config(format!("{what} must be a {d}x{d} matrix")));
    }
    Ok(rows.concat())
}

impl TargetSpec {
    pub fn build(&self) -> Result<SyntheticTarget<f64>> {
        let cfg = |e: eigenvi_core::Error| HarnessError::Config(format!("target: {e}"));
        match self {
            TargetSpec::Gaussian { mean, cov } => {
                SyntheticTarget::gaussian(mean.clone(), flatten_rows(cov, mean.len(), "target.cov")?).map_err(cfg)
            }
            TargetSpec::GaussianMixture { weights, means, covs } => {
                if means.is_empty() || covs.len() != means.len() {
                    return Err(HarnessError::Config(
                        "target: one covariance per mixture mean is required".into(),
                    ));
                }
                let covs = means
                    .iter()
                    .zip(covs)
                    .map(|(m, c)| flatten_rows(c, m.len(), "target.covs[i]"))
                    .collect::<Result<Vec<_>>>()?;
                SyntheticTarget::mixture(weights.clone(), means.clone(), covs).map_err(cfg)
            }
            TargetSpec::Funnel { sigma2 } => SyntheticTarget::funnel(*sigma2).map_err(cfg),
            TargetSpec::Cross => Ok(SyntheticTarget::cross()),
            TargetSpec::SinhArcsinh { s, tau, cov } => {
                SyntheticTarget::sinh_arcsinh(s.clone(), tau.clone(), flatten_rows(cov, s.len(), "target.cov")?)
                    .map_err(cfg)
            }
            TargetSpec::Fixture { name } => fixture(name),
        }
    }

    pub fn label(&self) -> String {
        match self {
            TargetSpec::Fixture { name } => name.clone(),
            TargetSpec::Gaussian { .. } => "gaussian".into(),
            TargetSpec::GaussianMixture { .. } => "gaussian_mixture".into(),
            TargetSpec::Funnel { .. } => "funnel".into(),
            TargetSpec::Cross => "cross".into(),
            TargetSpec::SinhArcsinh { .. } => "sinh_arcsinh".into(),
        }
    }
}

pub fn fixture(name: &str) -> Result<SyntheticTarget<f64>> {
    let t = match name {
        "mixture_2d" => SyntheticTarget::mixture_2d(),
        "funnel_2d" => SyntheticTarget::funnel_2d(),
        "cross_2d" => SyntheticTarget::cross(),
        "bimodal_1d" => SyntheticTarget::bimodal_1d(),
        _ => {
            let parsed = name
                .strip_prefix("sinh_arcsinh_2d_")
                .map(|i| (2, i))
                .or_else(|| name.strip_prefix("sinh_arcsinh_5d_").map(|i| (5, i)));
            let Some((dim, idx)) = parsed else {
                return Err(HarnessError::Config(format!("unknown target fixture `{name}`")));
            };
            let which: usize = idx
                .parse()
                .map_err(|_| HarnessError::Config(format!("unknown target fixture `{name}`")))?;
            let t = if dim == 2 {
                SyntheticTarget::sinh_arcsinh_2d(which)
            } else {
                SyntheticTarget::sinh_arcsinh_5d(which)
            };
            t.map_err(|_| HarnessError::Config(format!("unknown target fixture `{name}`")))?
        }
    };
    Ok(t)
}

/// Per-dimension orders: one number applies to every dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderSpec {
    Uniform(usize),
    PerDim(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    #[serde(default = "default_family")]
    pub family: BasisKind,
    /// Overrides `family` dimension by dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<BasisKind>>,
    /// Sweep axis over basis sizes, fitted in the listed order.
    pub orders: Vec<OrderSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,
}

fn default_family() -> BasisKind {
    BasisKind::HermiteWeighted
}

impl BasisSpec {
    pub fn build(&self, dim: usize) -> Result<Vec<ProductBasis>> {
        let kinds = match &self.families {
            Some(f) if f.len() != dim => {
                return Err(HarnessError::Config(format!(
                    "basis.families has {} entries for a {dim}-dimensional target",
                    f.len()
                )))
            }
            Some(f) => f.clone(),
            None => vec![self.family; dim],
        };
        let families: Vec<BasisFamily> = kinds
            .into_iter()
            .map(|k| {
                let f = BasisFamily::new(k);
                match self.max_order {
                    Some(m) => f.with_max_order(m),
                    None => f,
                }
            })
            .collect();
        self.orders
            .iter()
            .map(|o| {
                let orders = match o {
                    OrderSpec::Uniform(k) => vec![*k; dim],
                    OrderSpec::PerDim(v) => v.clone(),
                };
                ProductBasis::new(families.clone(), orders).map_err(|e| HarnessError::Config(format!("basis: {e}")))
            })
            .collect()
    }
}

/// Proposal in the coordinates the fit runs in (standardized ones when a
/// transform is used), always centred at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProposalSpec {
    UniformBox {
        #[serde(default = "default_half_width")]
        half_width: f64,
    },
    IsotropicGaussian {
        #[serde(default = "default_variance")]
        variance: f64,
    },
}

fn default_half_width() -> f64 {
    eigenvi_core::proposals::DEFAULT_BOX_HALF_WIDTH
}

fn default_variance() -> f64 {
    eigenvi_core::proposals::DEFAULT_GAUSSIAN_VARIANCE
}

impl Default for ProposalSpec {
    fn default() -> Self {
        ProposalSpec::UniformBox {
            half_width: default_half_width(),
        }
    }
}

impl ProposalSpec {
    pub fn build(&self, dim: usize) -> Result<Proposal<f64>> {
        let p = match self {
            ProposalSpec::UniformBox { half_width } => Proposal::centered_box(dim, *half_width),
            ProposalSpec::IsotropicGaussian { variance } => Proposal::isotropic_gaussian(vec![0.0; dim], *variance),
        };
        p.map_err(|e| HarnessError::Config(format!("proposal: {e}")))
    }
}

/// Batch-size sweep: either fixed sizes or multiples of each basis size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchSpec {
    Sizes(Vec<usize>),
    PerBasis(Vec<usize>),
}

impl Default for BatchSpec {
    fn default() -> Self {
        BatchSpec::PerBasis(vec![eigenvi_core::estimator::DEFAULT_SAMPLES_PER_BASIS])
    }
}

impl BatchSpec {
    pub fn values(&self) -> &[usize] {
        match self {
            BatchSpec::Sizes(v) | BatchSpec::PerBasis(v) => v,
        }
    }

    /// Batch size for value `v` of the sweep and basis size `k`.
    pub fn size(&self, v: usize, k: usize) -> usize {
        match self {
            BatchSpec::Sizes(_) => v,
            BatchSpec::PerBasis(_) => v * k,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum StandardizationSpec {
    #[default]
    None,
    /// Self-normalized importance sampling from `proposal`, in original coordinates.
    Estimate {
        #[serde(default = "default_standardization_samples")]
        samples: usize,
        #[serde(default)]
        proposal: ProposalSpec,
    },
    Given {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
}

fn default_standardization_samples() -> usize {
    10_000
}

impl StandardizationSpec {
    /// The user-supplied transform, if any.
    pub fn given(&self, dim: usize) -> Result<Option<StandardizingTransform<f64>>> {
        match self {
            StandardizationSpec::Given { mean, cov } => {
                if mean.len() != dim {
                    return Err(HarnessError::Config(format!(
                        "standardization.mean must have {dim} entries"
                    )));
                }
                let c = flatten_rows(cov, dim, "standardization.cov")?;
                StandardizingTransform::from_mean_cov(mean.clone(), &c)
                    .map(Some)
                    .map_err(|e| HarnessError::Config(format!("standardization: {e}")))
            }
            _ => Ok(None),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSpec {
    /// Exact target samples for the forward KL.
    #[serde(default = "default_kl_samples")]
    pub kl_samples: usize,
    /// Target samples (a prefix of the KL draw) for the empirical Fisher divergence.
    #[serde(default = "default_fisher_samples")]
    pub fisher_samples: usize,
    /// Draws from each fitted density, used to count CDF tail clips.
    #[serde(default = "default_q_samples")]
    pub q_samples: usize,
}

fn default_kl_samples() -> usize {
    100_000
}

fn default_fisher_samples() -> usize {
    10_000
}

fn default_q_samples() -> usize {
    10_000
}

impl Default for EvaluationSpec {
    fn default() -> Self {
        Self {
            kl_samples: default_kl_samples(),
            fisher_samples: default_fisher_samples(),
            q_samples: default_q_samples(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionSpec {
    #[serde(default = "default_chunk_size")]
    pub chunk_size: usize,
    /// Worker threads for matrix assembly; `None` uses the global pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Wall-clock columns are written as null when false, which makes
    /// `records.csv` byte-reproducible.
    #[serde(default = "default_true")]
    pub record_timings: bool,
}

fn default_chunk_size() -> usize {
    256
}

fn default_true() -> bool {
    true
}

impl Default for ExecutionSpec {
    fn default() -> Self {
        Self {
            chunk_size: default_chunk_size(),
            threads: None,
            record_timings: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_true")]
    pub write_densities: bool,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("eigenvi-out")
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_output_dir(),
            write_densities: true,
        }
    }
}

/// Command-line values that take precedence over the document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub chunk_size: Option<usize>,
    pub threads: Option<usize>,
    pub kl_samples: Option<usize>,
    pub no_timings: bool,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.output_dir {
            self.output.dir = d.clone();
        }
        if let Some(c) = o.chunk_size {
            self.execution.chunk_size = c;
        }
        if let Some(t) = o.threads {
            self.execution.threads = Some(t);
        }
        if let Some(n) = o.kl_samples {
            self.evaluation.kl_samples = n;
        }
        if o.no_timings {
            self.execution.record_timings = false;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.basis.orders.is_empty() {
            return bad("basis.orders must list at least one entry");
        }
        if self.batch.values().is_empty() {
            return bad("batch sweep must list at least one entry");
        }
        if self.batch.values().contains(&0) {
            return bad("batch sizes must be positive");
        }
        if self.evaluation.kl_samples == 0 {
            return bad("evaluation.kl_samples must be positive");
        }
        if self.execution.chunk_size == 0 {
            return bad("execution.chunk_size must be positive");
        }
        if self.execution.threads == Some(0) {
            return bad("execution.threads must be positive");
        }
        if let StandardizationSpec::Estimate { samples: 0, .. } = self.standardization {
            return bad("standardization.samples must be positive");
        }
        let target = self.target.build()?;
        let dim = eigenvi_core::ScoreTarget::dim(&target);
        self.basis.build(dim)?;
        self.proposal.build(dim)?;
        if let StandardizationSpec::Estimate { proposal, .. } = &self.standardization {
            proposal.build(dim)?;
        }
        self.standardization.given(dim)?;
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form. The output
    /// directory and thread count do not change results, so they are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = default_output_dir();
        c.execution.threads = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes())[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
