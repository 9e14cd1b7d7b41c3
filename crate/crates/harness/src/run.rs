//! Sweep execution.
//!
//! Cells are ordered batch value first, basis second. Within one batch value a
//! single score cache is drawn at the largest size any basis needs; each basis
//! fits on a prefix of it, so the target score is evaluated once per draw no
//! matter how many bases are swept. All randomness comes from ChaCha8 streams
//! keyed by `(seed, purpose, index)`.

use std::fs;
use std::path::{Path, PathBuf};

use eigenvi_core::estimator::FitDiagnostics;
use eigenvi_core::{
    estimate_transform, fit_cached, pull_density, push_target, AssemblyOptions, ExactTarget, FitOptions, OfeDensity,
    ProductBasis, Proposal, Sampler, ScoreCache, ScoreTarget, StandardizingTransform, SyntheticTarget,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, StandardizationSpec};
use crate::error::{HarnessError, Result, EXIT_OK, EXIT_RUNTIME};
use crate::metrics::{fisher_divergence_empirical, forward_kl_from_samples};
use crate::record::{long_rows, write_csv, RunRecord, STATUS_FAILED, STATUS_OK};

pub const RECORDS_FILE: &str = "records.csv";
pub const METRICS_FILE: &str = "metrics_long.csv";
pub const RUN_FILE: &str = "run.json";
pub const DENSITY_DIR: &str = "densities";

const STREAM_STANDARDIZE: u64 = 1;
const STREAM_BATCH: u64 = 2;
const STREAM_TARGET: u64 = 3;
const STREAM_Q: u64 = 4;

/// Independent stream `index` of kind `purpose` under `seed`.
pub fn stream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 32) | index);
    rng
}

/// Everything a run needs, resolved from the config.
pub struct Prepared {
    pub target: SyntheticTarget<f64>,
    pub bases: Vec<ProductBasis>,
    pub proposal: Proposal<f64>,
    /// `Err` carries the reason estimation failed.
    pub transform: std::result::Result<Option<StandardizingTransform<f64>>, String>,
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let target = config.target.build()?;
    let dim = target.dim();
    let bases = config.basis.build(dim)?;
    let proposal = config.proposal.build(dim)?;
    let transform = match &config.standardization {
        StandardizationSpec::None => Ok(None),
        StandardizationSpec::Given { .. } => Ok(config.standardization.given(dim)?),
        StandardizationSpec::Estimate { samples, proposal } => {
            let p = proposal.build(dim)?;
            let mut rng = stream(config.seed, STREAM_STANDARDIZE, 0);
            estimate_transform(&target, &p, *samples, &mut rng)
                .map(Some)
                .map_err(|e| format!("standardization failed: {e}"))
        }
    };
    Ok(Prepared {
        target,
        bases,
        proposal,
        transform,
    })
}

fn fit_options(config: &ExperimentConfig) -> FitOptions {
    FitOptions {
        assembly: AssemblyOptions {
            chunk_size: config.execution.chunk_size,
        },
        ..FitOptions::default()
    }
}

fn in_pool<F: FnOnce() -> R + Send, R: Send>(threads: Option<usize>, f: F) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn orders_label(basis: &ProductBasis) -> String {
    basis
        .orders()
        .iter()
        .map(|k| k.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub config_hash: String,
    pub records: Vec<RunRecord>,
    pub output_dir: PathBuf,
}

impl RunOutcome {
    pub fn failed_cells(&self) -> usize {
        self.records.iter().filter(|r| !r.is_ok()).count()
    }

    /// 0 unless every cell failed.
    pub fn exit_code(&self) -> i32 {
        if !self.records.is_empty() && self.failed_cells() == self.records.len() {
            EXIT_RUNTIME
        } else {
            EXIT_OK
        }
    }
}

#[derive(Serialize)]
struct RunDocument<'a> {
    config_hash: &'a str,
    config: &'a ExperimentConfig,
    cells: usize,
    failed_cells: usize,
    transform: Option<&'a StandardizingTransform<f64>>,
}

struct CellResult {
    density: OfeDensity<f64>,
    diag: FitDiagnostics,
    kl: std::result::Result<crate::metrics::Estimate, String>,
    fisher: std::result::Result<crate::metrics::Estimate, String>,
    tail_clips: std::result::Result<usize, String>,
}

/// Runs every cell, writes all outputs under `config.output.dir`, and returns
/// the records. Per-cell failures are recorded, not raised.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let prepared = prepare(config)?;
    let records = in_pool(config.execution.threads, || run_cells(config, &prepared))??;
    let outcome = RunOutcome {
        config_hash: config.hash(),
        records,
        output_dir: config.output.dir.clone(),
    };
    write_outputs(config, &prepared, &outcome)?;
    Ok(outcome)
}

fn base_record(config: &ExperimentConfig, cell: usize, basis: &ProductBasis, b: usize) -> RunRecord {
    RunRecord {
        config_hash: config.hash(),
        target: config.target.label(),
        cell,
        orders: orders_label(basis),
        k: basis.len(),
        b,
        status: STATUS_FAILED.into(),
        lambda_min: None,
        forward_kl: None,
        forward_kl_stderr: None,
        kl_excluded: None,
        fisher_divergence: None,
        fisher_stderr: None,
        fisher_excluded: None,
        rejected: None,
        tail_clips: None,
        score_eval_ms: None,
        assembly_ms: None,
        eigensolve_ms: None,
        density_path: None,
        null_reason: None,
    }
}

fn density_rel_path(cell: usize) -> String {
    format!("{DENSITY_DIR}/cell-{cell:03}.json")
}

fn run_cells(config: &ExperimentConfig, prep: &Prepared) -> Result<Vec<RunRecord>> {
    let nb = prep.bases.len();
    let values = config.batch.values();
    let mut records = Vec::with_capacity(nb * values.len());
    let transform = match &prep.transform {
        Ok(t) => t.clone(),
        Err(reason) => {
            for (bi, &bv) in values.iter().enumerate() {
                for (ki, basis) in prep.bases.iter().enumerate() {
                    let mut r = base_record(config, bi * nb + ki, basis, config.batch.size(bv, basis.len()));
                    r.null_reason = Some(reason.clone());
                    records.push(r);
                }
            }
            return Ok(records);
        }
    };
    let pushed = transform.clone().map(|t| push_target(&prep.target, t)).transpose()?;
    let fit_target: &dyn ScoreTarget<f64> = match &pushed {
        Some(p) => p,
        None => &prep.target,
    };
    let n_ref = config.evaluation.kl_samples.max(config.evaluation.fisher_samples);
    let reference = prep.target.sample(&mut stream(config.seed, STREAM_TARGET, 0), n_ref)?;
    let opts = fit_options(config);

    for (bi, &bv) in values.iter().enumerate() {
        let sizes: Vec<usize> = prep.bases.iter().map(|b| config.batch.size(bv, b.len())).collect();
        let max_b = sizes.iter().copied().max().unwrap_or(0);
        let cache = ScoreCache::draw(
            fit_target,
            &prep.proposal,
            max_b,
            &mut stream(config.seed, STREAM_BATCH, bi as u64),
        );
        for (ki, basis) in prep.bases.iter().enumerate() {
            let cell = bi * nb + ki;
            let b = sizes[ki];
            let mut rec = base_record(config, cell, basis, b);
            let cache = match &cache {
                Ok(c) => c,
                Err(e) => {
                    rec.null_reason = Some(format!("score evaluation failed: {e}"));
                    records.push(rec);
                    continue;
                }
            };
            let prefix;
            let sub = if b == cache.drawn() {
                cache
            } else {
                prefix = cache.prefix(b);
                &prefix
            };
            match fit_cell(config, prep, transform.as_ref(), basis, sub, &reference, opts, cell) {
                Ok(res) => fill_record(config, &mut rec, res, sub.score_time_ms())?,
                Err(e) => rec.null_reason = Some(format!("fit failed: {e}")),
            }
            records.push(rec);
        }
    }
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
fn fit_cell(
    config: &ExperimentConfig,
    prep: &Prepared,
    transform: Option<&StandardizingTransform<f64>>,
    basis: &ProductBasis,
    cache: &ScoreCache<f64>,
    reference: &[Vec<f64>],
    opts: FitOptions,
    cell: usize,
) -> Result<CellResult> {
    let (qt, diag) = fit_cached(basis, cache, opts)?;
    let density = match transform {
        Some(t) => pull_density(qt, t.clone())?,
        None => qt,
    };
    let ev = &config.evaluation;
    let kl = forward_kl_from_samples(&prep.target, &density, &reference[..ev.kl_samples]).map_err(|e| e.to_string());
    let fisher = if ev.fisher_samples == 0 {
        Err("fisher_samples is 0".to_string())
    } else {
        fisher_divergence_empirical(&prep.target, &density, &reference[..ev.fisher_samples]).map_err(|e| e.to_string())
    };
    let tail_clips = if ev.q_samples == 0 {
        Err("q_samples is 0".to_string())
    } else {
        Sampler::new(&density)
            .map(|s| {
                s.sample(&mut stream(config.seed, STREAM_Q, cell as u64), ev.q_samples)
                    .tail_clips
            })
            .map_err(|e| format!("sampler unavailable: {e}"))
    };
    Ok(CellResult {
        density,
        diag,
        kl,
        fisher,
        tail_clips,
    })
}

fn fill_record(config: &ExperimentConfig, rec: &mut RunRecord, res: CellResult, score_ms: f64) -> Result<()> {
    let mut reasons = Vec::new();
    rec.status = STATUS_OK.into();
    rec.lambda_min = Some(res.diag.lambda_min);
    rec.rejected = Some(res.diag.rejected);
    match res.kl {
        Ok(k) => {
            rec.forward_kl = Some(k.value);
            rec.forward_kl_stderr = Some(k.stderr);
            rec.kl_excluded = Some(k.excluded);
        }
        Err(e) => reasons.push(format!("forward_kl: {e}")),
    }
    match res.fisher {
        Ok(f) => {
            rec.fisher_divergence = Some(f.value);
            rec.fisher_stderr = Some(f.stderr);
            rec.fisher_excluded = Some(f.excluded);
        }
        Err(e) => reasons.push(format!("fisher_divergence: {e}")),
    }
    match res.tail_clips {
        Ok(c) => rec.tail_clips = Some(c),
        Err(e) => reasons.push(format!("tail_clips: {e}")),
    }
    if config.execution.record_timings {
        rec.score_eval_ms = Some(score_ms);
        rec.assembly_ms = Some(res.diag.assembly_ms);
        rec.eigensolve_ms = Some(res.diag.eigensolve_ms);
    } else {
        reasons.push("timings disabled".into());
    }
    if config.output.write_densities {
        let rel = density_rel_path(rec.cell);
        let path = config.output.dir.join(&rel);
        write_file(&path, res.density.to_json()?.as_bytes())?;
        rec.density_path = Some(rel);
    } else {
        reasons.push("density output disabled".into());
    }
    if !reasons.is_empty() {
        rec.null_reason = Some(reasons.join("; "));
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

fn write_outputs(config: &ExperimentConfig, prep: &Prepared, outcome: &RunOutcome) -> Result<()> {
    let dir = &config.output.dir;
    let mut buf = Vec::new();
    write_csv(&mut buf, &outcome.records)?;
    write_file(&dir.join(RECORDS_FILE), &buf)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &long_rows(&outcome.records))?;
    write_file(&dir.join(METRICS_FILE), &buf)?;
    let doc = RunDocument {
        config_hash: &outcome.config_hash,
        config,
        cells: outcome.records.len(),
        failed_cells: outcome.failed_cells(),
        transform: prep.transform.as_ref().ok().and_then(|t| t.as_ref()),
    };
    let json = serde_json::to_string_pretty(&doc).map_err(|e| HarnessError::io(RUN_FILE, e))?;
    write_file(&dir.join(RUN_FILE), json.as_bytes())
}

/// Fits one cell of the sweep: basis `order_index`, batch value `batch_index`.
pub fn fit_one(
    config: &ExperimentConfig,
    order_index: usize,
    batch_index: usize,
) -> Result<(OfeDensity<f64>, FitDiagnostics)> {
    config.validate()?;
    let prep = prepare(config)?;
    let basis = prep.bases.get(order_index).ok_or_else(|| {
        HarnessError::Config(format!(
            "order index {order_index} out of range (0..{})",
            prep.bases.len()
        ))
    })?;
    let bv = *config.batch.values().get(batch_index).ok_or_else(|| {
        HarnessError::Config(format!(
            "batch index {batch_index} out of range (0..{})",
            config.batch.values().len()
        ))
    })?;
    let b = config.batch.size(bv, basis.len());
    let transform = prep
        .transform
        .clone()
        .map_err(|e| HarnessError::Core(eigenvi_core::Error::InvalidParameter(e)))?;
    in_pool(config.execution.threads, || {
        let pushed = transform.clone().map(|t| push_target(&prep.target, t)).transpose()?;
        let fit_target: &dyn ScoreTarget<f64> = match &pushed {
            Some(p) => p,
            None => &prep.target,
        };
        let mut rng = stream(config.seed, STREAM_BATCH, batch_index as u64);
        let cache = ScoreCache::draw(fit_target, &prep.proposal, b, &mut rng)?;
        let (qt, diag) = fit_cached(basis, &cache, fit_options(config))?;
        let q = match transform {
            Some(t) => pull_density(qt, t)?,
            None => qt,
        };
        Ok((q, diag))
    })?
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn config(dir: &Path, extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"{{
                "schema_version": 1,
                "seed": 11,
                "target": {{"kind": "gaussian", "mean": [3.0], "cov": [[0.125]]}},
                "basis": {{"orders": [1, 3]}},
                "batch": {{"per_basis": [10, 20]}},
                "evaluation": {{"kl_samples": 2000, "fisher_samples": 500, "q_samples": 200}},
                "output": {{"dir": {:?}}}
                {extra}
            }}"#,
            dir.display().to_string()
        );
        ExperimentConfig::from_json(&text).unwrap()
    }

    #[test]
    fn sweep_writes_every_cell() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config(
            tmp.path(),
            r#", "standardization": {"mode": "given", "mean": [3.0], "cov": [[0.125]]}"#,
        );
        let out = run(&cfg).unwrap();
        assert_eq!(out.records.len(), 4);
        assert_eq!(out.exit_code(), EXIT_OK);
        let orders: Vec<_> = out.records.iter().map(|r| (r.k, r.b)).collect();
        assert_eq!(orders, vec![(1, 10), (3, 30), (1, 20), (3, 60)]);
        for r in &out.records {
            assert!(r.is_ok(), "{r:?}");
            assert!(r.lambda_min.unwrap() < 1e-10);
            assert!(tmp.path().join(r.density_path.as_ref().unwrap()).exists());
        }
        assert!(tmp.path().join(RECORDS_FILE).exists());
        assert!(tmp.path().join(METRICS_FILE).exists());
        assert!(tmp.path().join(RUN_FILE).exists());
    }

    #[test]
    fn failed_cells_are_recorded() {
        let tmp = tempfile::tempdir().unwrap();
        // the box proposal reaches below zero, outside the Laguerre support
        let mut cfg = config(tmp.path(), "");
        cfg.basis.family = eigenvi_core::BasisKind::LaguerreWeighted;
        let out = run(&cfg).unwrap();
        assert_eq!(out.failed_cells(), 4);
        assert_eq!(out.exit_code(), EXIT_RUNTIME);
        for r in &out.records {
            assert!(r.null_reason.as_deref().unwrap().starts_with("fit failed"), "{r:?}");
            assert!(r.lambda_min.is_none() && r.density_path.is_none());
        }
        assert!(tmp.path().join(RECORDS_FILE).exists());
    }

    #[test]
    fn single_fit_matches_cell_zero() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config(tmp.path(), r#", "execution": {"record_timings": false}"#);
        let (q, diag) = fit_one(&cfg, 1, 0).unwrap();
        assert_eq!(diag.basis_size, 3);
        assert_eq!(diag.batch_size, 30);
        assert_eq!(q.dim(), 1);
        assert!(fit_one(&cfg, 5, 0).is_err());
    }
}
