//! Command-line front end. Every subcommand returns a process exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use eigenvi_core::{OfeDensity, Sampler};
use serde_json::json;

use crate::config::{BatchSpec, ExperimentConfig, OrderSpec, Overrides};
use crate::error::{HarnessError, Result, EXIT_CONFIG, EXIT_OK};
use crate::metrics::{fisher_divergence_empirical, forward_kl_from_samples};
use crate::run::{fit_one, run, stream, RECORDS_FILE};

const STREAM_CLI_SAMPLE: u64 = 10;
const STREAM_CLI_EVAL: u64 = 11;

#[derive(Debug, Parser)]
#[command(
    name = "eigenvi",
    version,
    about = "Score-based variational inference with orthogonal function expansions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every cell of a config's sweep and write CSV outputs.
    Sweep(SweepArgs),
    /// Fit one basis and write the density as JSON.
    Fit(FitArgs),
    /// Draw exact samples from a saved density.
    Sample(SampleArgs),
    /// Print the mean and covariance of a saved density.
    Moments(MomentsArgs),
    /// Forward KL and Fisher divergence of a saved density against a config's target.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub chunk_size: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub kl_samples: Option<usize>,
    /// Leave timing columns empty so outputs are byte-reproducible.
    #[arg(long)]
    pub no_timings: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Orders, one per dimension or a single value for all, e.g. `3,3`.
    /// Defaults to the first entry of the config's sweep.
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<usize>>,
    /// Batch size; defaults to the first batch value of the config.
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Density JSON destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub density: PathBuf,
    #[arg(short = 'n', long = "count")]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub density: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub density: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub kl_samples: Option<usize>,
    #[arg(long)]
    pub fisher_samples: Option<usize>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("eigenvi: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Sweep(a) => sweep(a),
        Command::Fit(a) => fit(a),
        Command::Sample(a) => sample(a),
        Command::Moments(a) => moments(a),
        Command::Evaluate(a) => evaluate(a),
    }
}

fn load_density(path: &Path) -> Result<OfeDensity<f64>> {
    let text =
        fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    OfeDensity::from_json(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn write_or_print(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
            }
            fs::write(p, bytes).map_err(|e| HarnessError::io(p, e))
        }
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| HarnessError::io("stdout", e)),
    }
}

fn sweep(a: SweepArgs) -> Result<i32> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    cfg.apply(&Overrides {
        seed: a.seed,
        output_dir: a.output,
        chunk_size: a.chunk_size,
        threads: a.threads,
        kl_samples: a.kl_samples,
        no_timings: a.no_timings,
    })?;
    let out = run(&cfg)?;
    eprintln!(
        "{} cells, {} failed; wrote {}",
        out.records.len(),
        out.failed_cells(),
        out.output_dir.join(RECORDS_FILE).display()
    );
    if let Some(first) = out
        .records
        .iter()
        .find_map(|r| (!r.is_ok()).then(|| r.null_reason.clone()))
    {
        eprintln!("first failure: {}", first.unwrap_or_default());
    }
    Ok(out.exit_code())
}

fn fit(a: FitArgs) -> Result<i32> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(o) = a.orders {
        cfg.basis.orders = vec![match o.as_slice() {
            [k] => OrderSpec::Uniform(*k),
            _ => OrderSpec::PerDim(o),
        }];
    }
    if let Some(b) = a.batch {
        cfg.batch = BatchSpec::Sizes(vec![b]);
    }
    cfg.apply(&Overrides {
        seed: a.seed,
        threads: a.threads,
        ..Overrides::default()
    })?;
    let (q, diag) = fit_one(&cfg, 0, 0)?;
    write_or_print(a.out.as_deref(), q.to_json()?.as_bytes())?;
    let summary = serde_json::to_string(&diag).map_err(|e| HarnessError::io("diagnostics", e))?;
    eprintln!("{summary}");
    Ok(EXIT_OK)
}

fn sample(a: SampleArgs) -> Result<i32> {
    let q = load_density(&a.density)?;
    let sampler = Sampler::new(&q)?;
    let batch = sampler.sample(&mut stream(a.seed, STREAM_CLI_SAMPLE, 0), a.n);
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let header: Vec<String> = (0..q.dim()).map(|d| format!("z{d}")).collect();
        w.write_record(&header).map_err(|e| HarnessError::io("csv", e))?;
        for p in &batch.points {
            w.write_record(p.iter().map(|v| v.to_string()))
                .map_err(|e| HarnessError::io("csv", e))?;
        }
        w.flush().map_err(|e| HarnessError::io("csv", e))?;
    }
    write_or_print(a.out.as_deref(), &buf)?;
    eprintln!("{} samples, {} tail clips", batch.points.len(), batch.tail_clips);
    Ok(EXIT_OK)
}

fn rows(flat: &[f64], d: usize) -> Vec<Vec<f64>> {
    flat.chunks(d).map(<[f64]>::to_vec).collect()
}

fn moments(a: MomentsArgs) -> Result<i32> {
    let q = load_density(&a.density)?;
    let m = q.moments()?;
    let doc = json!({ "mean": m.mean, "covariance": rows(&m.covariance, q.dim()) });
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).map_err(|e| HarnessError::io("stdout", e))?
    );
    Ok(EXIT_OK)
}

fn evaluate(a: EvaluateArgs) -> Result<i32> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    cfg.apply(&Overrides {
        seed: a.seed,
        kl_samples: a.kl_samples,
        ..Overrides::default()
    })?;
    if let Some(f) = a.fisher_samples {
        cfg.evaluation.fisher_samples = f;
    }
    let q = load_density(&a.density)?;
    let target = cfg.target.build()?;
    let dim = eigenvi_core::ScoreTarget::dim(&target);
    if q.dim() != dim {
        return Err(HarnessError::Config(format!(
            "density has dimension {} but the target has {dim}",
            q.dim()
        )));
    }
    let ev = &cfg.evaluation;
    let draws = eigenvi_core::ExactTarget::sample(
        &target,
        &mut stream(cfg.seed, STREAM_CLI_EVAL, 0),
        ev.kl_samples.max(ev.fisher_samples),
    )?;
    let kl = forward_kl_from_samples(&target, &q, &draws[..ev.kl_samples])?;
    let fisher = if ev.fisher_samples > 0 {
        Some(fisher_divergence_empirical(&target, &q, &draws[..ev.fisher_samples])?)
    } else {
        None
    };
    let doc = json!({ "target": cfg.target.label(), "forward_kl": kl, "fisher_divergence": fisher });
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).map_err(|e| HarnessError::io("stdout", e))?
    );
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(main_with_args(["eigenvi", "--help"]), EXIT_OK);
        assert_eq!(main_with_args(["eigenvi", "--version"]), EXIT_OK);
    }

    #[test]
    fn parse_errors_are_config_errors() {
        assert_eq!(main_with_args(["eigenvi"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["eigenvi", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(
            main_with_args(["eigenvi", "sample", "--density", "x.json"]),
            EXIT_CONFIG
        );
    }

    #[test]
    fn missing_files_are_config_errors() {
        assert_eq!(
            main_with_args(["eigenvi", "sweep", "--config", "/nonexistent/c.json"]),
            EXIT_CONFIG
        );
        assert_eq!(
            main_with_args(["eigenvi", "moments", "--density", "/nonexistent/q.json"]),
            EXIT_CONFIG
        );
    }

    #[test]
    fn orders_parse_as_list() {
        let cli = Cli::try_parse_from(["eigenvi", "fit", "--config", "c.json", "--orders", "3,4"]).unwrap();
        match cli.command {
            Command::Fit(f) => assert_eq!(f.orders, Some(vec![3, 4])),
            other => panic!("{other:?}"),
        }
    }
}
