//! Comma-separated report tables: per-window scores, bins, margins and the
//! sweep matrix.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{BinStat, CellOutcome, EvalRecord, MarginResult, SweepResult};

pub const SCORE_HEADER: [&str; 8] = [
    "window_id",
    "sqi",
    "metric",
    "degenerate",
    "failures",
    "f_low_hz",
    "f_high_hz",
    "noise_seed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub window_id: String,
    pub sqi: f64,
    /// Realized metric against ground truth, when annotations exist.
    pub metric: Option<f64>,
    pub degenerate: bool,
    pub failures: usize,
    pub f_low_hz: Option<f64>,
    pub f_high_hz: Option<f64>,
    pub noise_seed: u64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_scores<W: Write>(out: W, rows: &[ScoreRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCORE_HEADER)?;
    for r in rows {
        w.write_record([
            r.window_id.clone(),
            r.sqi.to_string(),
            opt(r.metric),
            r.degenerate.to_string(),
            r.failures.to_string(),
            opt(r.f_low_hz),
            opt(r.f_high_hz),
            r.noise_seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    rec[i].parse().map_err(|e: T::Err| Error::Parse {
        path: "<scores>".into(),
        line,
        message: format!("column {} ({:?}): {e}", SCORE_HEADER[i], &rec[i]),
    })
}

fn opt_field(rec: &csv::StringRecord, i: usize, line: usize) -> Result<Option<f64>> {
    if rec[i].is_empty() {
        Ok(None)
    } else {
        field(rec, i, line).map(Some)
    }
}

pub fn read_scores<R: Read>(input: R) -> Result<Vec<ScoreRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != SCORE_HEADER {
        return Err(Error::Parse {
            path: "<scores>".into(),
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        rows.push(ScoreRow {
            window_id: rec[0].to_owned(),
            sqi: field(&rec, 1, line)?,
            metric: opt_field(&rec, 2, line)?,
            degenerate: field(&rec, 3, line)?,
            failures: field(&rec, 4, line)?,
            f_low_hz: opt_field(&rec, 5, line)?,
            f_high_hz: opt_field(&rec, 6, line)?,
            noise_seed: field(&rec, 7, line)?,
        });
    }
    Ok(rows)
}

/// Records for evaluation; rows without a realized metric are an error.
pub fn eval_records(rows: &[ScoreRow]) -> Result<Vec<EvalRecord>> {
    rows.iter()
        .map(|r| {
            r.metric
                .map(|m| EvalRecord::new(r.window_id.clone(), r.sqi, m))
                .ok_or_else(|| {
                    Error::AnnotationMissing(format!(
                        "window {} has no realized metric",
                        r.window_id
                    ))
                })
        })
        .collect()
}

pub fn write_bins<W: Write>(out: W, bins: &[BinStat]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin", "lower", "upper", "count", "mean_metric"])?;
    for b in bins {
        w.write_record([
            b.index.to_string(),
            b.lower.to_string(),
            b.upper.to_string(),
            b.count.to_string(),
            b.mean_metric.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Everything `evaluate` reports besides the bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub n_records: usize,
    pub monotone: bool,
    pub spearman_binned: Option<f64>,
    pub spearman_records: Option<f64>,
    pub margin: MarginResult,
    pub binary_margin: Option<f64>,
}

/// Two-column `quantity,value` report.
pub fn write_summary<W: Write>(out: W, s: &EvaluationSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "value"])?;
    let rows = [
        ("n_records", s.n_records.to_string()),
        ("monotone", s.monotone.to_string()),
        ("spearman_binned", opt(s.spearman_binned)),
        ("spearman_records", opt(s.spearman_records)),
        ("tau_star", s.margin.tau_star.to_string()),
        ("delta_star", s.margin.delta_star.to_string()),
        ("above_mean", s.margin.above_mean.to_string()),
        ("below_mean", s.margin.below_mean.to_string()),
        ("above_count", s.margin.above_count.to_string()),
        ("below_count", s.margin.below_count.to_string()),
        ("binary_margin", opt(s.binary_margin)),
    ];
    for (k, v) in rows {
        w.write_record([k, v.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows are gamma values, columns beta values; cells hold Δ*, `infeasible`
/// or `error`.
pub fn write_sweep<W: Write>(out: W, sweep: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["gamma_db\\beta_db".to_owned()];
    header.extend(sweep.beta_grid.iter().map(|b| b.to_string()));
    w.write_record(&header)?;
    for (g, row) in sweep.gamma_grid.iter().zip(&sweep.cells) {
        let mut record = vec![g.to_string()];
        record.extend(row.iter().map(|c| match &c.outcome {
            CellOutcome::Ok(m) => m.delta_star.to_string(),
            CellOutcome::Infeasible { .. } => "infeasible".to_owned(),
            CellOutcome::Error { .. } => "error".to_owned(),
        }));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
