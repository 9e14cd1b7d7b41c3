//! One row per fitted cell, plus the long-format metric table.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const STATUS_OK: &str = "ok";
pub const STATUS_FAILED: &str = "failed";

/// Numeric fields are `None` only when `null_reason` says why.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub target: String,
    pub cell: usize,
    /// Per-dimension orders joined with `x`, e.g. `3x3`.
    pub orders: String,
    pub k: usize,
    pub b: usize,
    pub status: String,
    pub lambda_min: Option<f64>,
    pub forward_kl: Option<f64>,
    pub forward_kl_stderr: Option<f64>,
    pub kl_excluded: Option<usize>,
    pub fisher_divergence: Option<f64>,
    pub fisher_stderr: Option<f64>,
    pub fisher_excluded: Option<usize>,
    pub rejected: Option<usize>,
    pub tail_clips: Option<usize>,
    pub score_eval_ms: Option<f64>,
    pub assembly_ms: Option<f64>,
    pub eigensolve_ms: Option<f64>,
    pub density_path: Option<String>,
    pub null_reason: Option<String>,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    /// `(metric, value)` pairs for the long table; timings are left out so the
    /// table is reproducible byte for byte.
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        let mut out = Vec::new();
        let mut push = |name, v: Option<f64>| {
            if let Some(v) = v {
                out.push((name, v));
            }
        };
        push("lambda_min", self.lambda_min);
        push("forward_kl", self.forward_kl);
        push("forward_kl_stderr", self.forward_kl_stderr);
        push("fisher_divergence", self.fisher_divergence);
        push("fisher_divergence_stderr", self.fisher_stderr);
        push("tail_clips", self.tail_clips.map(|c| c as f64));
        push("rejected", self.rejected.map(|c| c as f64));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub cell: usize,
    pub orders: String,
    pub k: usize,
    pub b: usize,
    pub metric: String,
    pub value: f64,
}

pub fn long_rows(records: &[RunRecord]) -> Vec<MetricRow> {
    records
        .iter()
        .flat_map(|r| {
            r.metrics().into_iter().map(move |(m, v)| MetricRow {
                cell: r.cell,
                orders: r.orders.clone(),
                k: r.k,
                b: r.b,
                metric: m.to_string(),
                value: v,
            })
        })
        .collect()
}

pub fn write_csv<W: Write, S: Serialize>(w: W, rows: &[S]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| HarnessError::io("csv", e))?;
    }
    wr.flush().map_err(|e| HarnessError::io("csv", e))
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<RunRecord>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| HarnessError::io("csv", e))
}

pub fn read_metric_rows<R: Read>(r: R) -> Result<Vec<MetricRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| HarnessError::io("csv", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunRecord {
        RunRecord {
            config_hash: "0123456789abcdef".into(),
            target: "mixture_2d".into(),
            cell: 2,
            orders: "3x3".into(),
            k: 9,
            b: 90,
            status: STATUS_OK.into(),
            lambda_min: Some(0.1 + 0.2),
            forward_kl: Some(1.0 / 3.0),
            forward_kl_stderr: Some(2.5e-17),
            kl_excluded: Some(0),
            fisher_divergence: Some(std::f64::consts::PI * 1e10),
            fisher_stderr: Some(f64::MIN_POSITIVE),
            fisher_excluded: Some(1),
            rejected: Some(0),
            tail_clips: Some(3),
            score_eval_ms: None,
            assembly_ms: None,
            eigensolve_ms: None,
            density_path: Some("densities/cell-002.json".into()),
            null_reason: Some("timings disabled, a \"quoted\" note".into()),
        }
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let rows = vec![
            sample(),
            RunRecord {
                status: STATUS_FAILED.into(),
                lambda_min: None,
                density_path: None,
                ..sample()
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let back = read_records(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.forward_kl.unwrap().to_bits(), b.forward_kl.unwrap().to_bits());
        }
    }

    #[test]
    fn long_table_skips_nulls() {
        let r = RunRecord {
            tail_clips: None,
            ..sample()
        };
        let rows = long_rows(&[r]);
        assert!(rows.iter().all(|m| m.metric != "tail_clips"));
        assert!(rows.iter().any(|m| m.metric == "forward_kl"));
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        assert_eq!(read_metric_rows(buf.as_slice()).unwrap(), rows);
    }
}
