//! Evaluation of an SQI against realized task performance: monotonicity over
//! uniform SQI bins, Spearman correlation, separation margins, and the SNR
//! hyperparameter sweep.
//!
//! Ground truth enters here, through [`EvalRecord::metric`], and nowhere in
//! the scoring path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{psqi_score, PsqiConfig};
use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::tasks::TaskBinding;

pub const DEFAULT_BINS: usize = 25;
pub const DEFAULT_MIN_COUNT: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub window_id: String,
    pub sqi: f64,
    /// Realized metric of the task output against ground truth.
    pub metric: f64,
}

impl EvalRecord {
    pub fn new(window_id: impl Into<String>, sqi: f64, metric: f64) -> Self {
        Self {
            window_id: window_id.into(),
            sqi,
            metric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStat {
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginResult {
    pub tau_star: f64,
    pub delta_star: f64,
    pub above_mean: f64,
    pub below_mean: f64,
    pub above_count: usize,
    pub below_count: usize,
}

fn check_finite(records: &[EvalRecord]) -> Result<()> {
    match records
        .iter()
        .find(|r| !(r.sqi.is_finite() && r.metric.is_finite()))
    {
        Some(r) => Err(Error::Range(format!(
            "record {} has non-finite values ({}, {})",
            r.window_id, r.sqi, r.metric
        ))),
        None => Ok(()),
    }
}

/// Uniform partition of `[0, 1]` into `n_bins` half-open bins (the last one
/// closed); empty bins are left out.
pub fn monotonicity_bins(records: &[EvalRecord], n_bins: usize) -> Result<Vec<BinStat>> {
    if n_bins < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {n_bins}")));
    }
    check_finite(records)?;
    let edge = |k: usize| k as f64 / n_bins as f64;
    let mut sums = vec![(0usize, 0.0f64); n_bins];
    for r in records {
        if !(0.0..=1.0).contains(&r.sqi) {
            return Err(Error::Range(format!(
                "sqi {} of {} outside [0, 1]; normalize scores first",
                r.sqi, r.window_id
            )));
        }
        let mut k = ((r.sqi * n_bins as f64).floor() as usize).min(n_bins - 1);
        if r.sqi < edge(k) {
            k -= 1;
        } else if k + 1 < n_bins && r.sqi >= edge(k + 1) {
            k += 1;
        }
        sums[k].0 += 1;
        sums[k].1 += r.metric;
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .filter(|(_, (c, _))| *c > 0)
        .map(|(k, (count, total))| BinStat {
            index: k,
            lower: edge(k),
            upper: edge(k + 1),
            count,
            mean_metric: total / count as f64,
        })
        .collect())
}

/// Bin means strictly increase over the nonempty bins.
pub fn is_monotone(bins: &[BinStat]) -> bool {
    bins.windows(2).all(|w| w[0].mean_metric < w[1].mean_metric)
}

/// Average (mid) ranks, 1-based.
pub fn mid_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation: Pearson correlation of mid-ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "{} pairs, need at least 2",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::UndefinedCorrelation("non-finite input".into()));
    }
    let (rx, ry) = (mid_ranks(xs), mid_ranks(ys));
    let n = rx.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean, b - mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("all values identical".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman over `(bin index, bin mean)` of the nonempty bins.
pub fn binned_spearman(bins: &[BinStat]) -> Result<f64> {
    let idx: Vec<f64> = bins.iter().map(|b| b.index as f64).collect();
    let means: Vec<f64> = bins.iter().map(|b| b.mean_metric).collect();
    spearman(&idx, &means)
}

/// Spearman over the raw `(sqi, metric)` pairs.
pub fn record_spearman(records: &[EvalRecord]) -> Result<f64> {
    let q: Vec<f64> = records.iter().map(|r| r.sqi).collect();
    let h: Vec<f64> = records.iter().map(|r| r.metric).collect();
    spearman(&q, &h)
}

/// `mean(metric | sqi >= tau) - mean(metric | sqi < tau)`.
pub fn separation_margin(records: &[EvalRecord], tau: f64) -> Result<f64> {
    check_finite(records)?;
    let (mut above, mut na, mut below, mut nb) = (0.0, 0usize, 0.0, 0usize);
    for r in records {
        if r.sqi >= tau {
            above += r.metric;
            na += 1;
        } else {
            below += r.metric;
            nb += 1;
        }
    }
    if na == 0 || nb == 0 {
        return Err(Error::UndefinedMargin(format!(
            "threshold {tau} leaves {na} records above and {nb} below"
        )));
    }
    Ok(above / na as f64 - below / nb as f64)
}

/// Best separation margin over thresholds at midpoints between consecutive
/// distinct SQI values that leave at least `min_count` records on each
/// side. Ties go to the smallest threshold.
pub fn optimal_margin(records: &[EvalRecord], min_count: usize) -> Result<MarginResult> {
    check_finite(records)?;
    let infeasible = || Error::InfeasibleMargin {
        n: records.len(),
        min_count,
    };
    let min_count = min_count.max(1);
    if records.len() < 2 * min_count {
        return Err(infeasible());
    }
    let mut sorted: Vec<(f64, f64)> = records.iter().map(|r| (r.sqi, r.metric)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for (_, m) in &sorted {
        prefix.push(prefix.last().unwrap() + m);
    }
    let total = prefix[n];

    let mut best: Option<MarginResult> = None;
    for i in 0..n - 1 {
        if sorted[i].0 == sorted[i + 1].0 {
            continue;
        }
        let below_count = i + 1;
        let above_count = n - below_count;
        if below_count < min_count || above_count < min_count {
            continue;
        }
        let below_mean = prefix[below_count] / below_count as f64;
        let above_mean = (total - prefix[below_count]) / above_count as f64;
        let delta = above_mean - below_mean;
        if best.as_ref().is_none_or(|b| delta > b.delta_star) {
            best = Some(MarginResult {
                tau_star: 0.5 * (sorted[i].0 + sorted[i + 1].0),
                delta_star: delta,
                above_mean,
                below_mean,
                above_count,
                below_count,
            });
        }
    }
    best.ok_or_else(infeasible)
}

/// Margin of a binary SQI: `mean(metric | sqi = 1) - mean(metric | sqi = 0)`.
pub fn binary_margin(records: &[EvalRecord]) -> Result<f64> {
    check_finite(records)?;
    let (mut ones, mut n1, mut zeros, mut n0) = (0.0, 0usize, 0.0, 0usize);
    for r in records {
        if r.metric != 0.0 && r.metric != 1.0 {
            return Err(Error::Range(format!(
                "binary margin needs metrics in {{0, 1}}, {} has {}",
                r.window_id, r.metric
            )));
        }
        if r.sqi == 1.0 {
            ones += r.metric;
            n1 += 1;
        } else if r.sqi == 0.0 {
            zeros += r.metric;
            n0 += 1;
        } else {
            return Err(Error::Range(format!(
                "binary margin needs sqi in {{0, 1}}, {} has {}",
                r.window_id, r.sqi
            )));
        }
    }
    if n1 == 0 || n0 == 0 {
        return Err(Error::UndefinedMargin(format!(
            "{n1} records with sqi 1 and {n0} with sqi 0"
        )));
    }
    Ok(ones / n1 as f64 - zeros / n0 as f64)
}

/// Scores every window in parallel; results keep the input order and use the
/// position as window index for seeding.
pub fn score_windows<Y: Clone + Send>(
    windows: &[Signal],
    binding: &TaskBinding<Y>,
    cfg: &PsqiConfig,
) -> Vec<Result<f64>> {
    windows
        .par_iter()
        .enumerate()
        .map(|(i, x)| psqi_score(x, binding, cfg, i as u64).map(|r| r.score))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Ok(MarginResult),
    Infeasible { reason: String },
    Error { reason: String },
}

impl CellOutcome {
    pub fn delta_star(&self) -> Option<f64> {
        match self {
            CellOutcome::Ok(m) => Some(m.delta_star),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub gamma_db: f64,
    pub beta_db: f64,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub gamma_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    /// Row-major: `cells[g][b]`.
    pub cells: Vec<Vec<SweepCell>>,
    /// `(gamma index, beta index)` of the largest feasible margin.
    pub argmax: Option<(usize, usize)>,
}

impl SweepResult {
    pub fn cell(&self, gamma_db: f64, beta_db: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .flatten()
            .find(|c| c.gamma_db == gamma_db && c.beta_db == beta_db)
    }
}

/// Recomputes pSQI scores for every `(gamma, beta)` pair and reports the
/// optimal margin against `realized` metrics. Failures are kept per cell.
pub fn snr_sweep<Y: Clone + Send>(
    windows: &[Signal],
    realized: &[f64],
    binding: &TaskBinding<Y>,
    gamma_grid: &[f64],
    beta_grid: &[f64],
    cfg: &PsqiConfig,
    min_count: usize,
) -> Result<SweepResult> {
    if gamma_grid.is_empty() || beta_grid.is_empty() {
        return Err(Error::Config("sweep grids must be nonempty".into()));
    }
    if windows.len() != realized.len() {
        return Err(Error::LengthMismatch(windows.len(), realized.len()));
    }
    let mut cells = Vec::with_capacity(gamma_grid.len());
    for &gamma_db in gamma_grid {
        let mut row = Vec::with_capacity(beta_grid.len());
        for &beta_db in beta_grid {
            let cell_cfg = cfg.with_snr(gamma_db, beta_db);
            let outcome = sweep_cell(windows, realized, binding, &cell_cfg, min_count);
            log::debug!("sweep cell ({gamma_db}, {beta_db}) -> {outcome:?}");
            row.push(SweepCell {
                gamma_db,
                beta_db,
                outcome,
            });
        }
        cells.push(row);
    }
    let mut argmax: Option<((usize, usize), f64)> = None;
    for (g, row) in cells.iter().enumerate() {
        for (b, cell) in row.iter().enumerate() {
            if let Some(d) = cell.outcome.delta_star() {
                if argmax.is_none_or(|(_, best)| d > best) {
                    argmax = Some(((g, b), d));
                }
            }
        }
    }
    Ok(SweepResult {
        gamma_grid: gamma_grid.to_vec(),
        beta_grid: beta_grid.to_vec(),
        cells,
        argmax: argmax.map(|(i, _)| i),
    })
}

fn sweep_cell<Y: Clone + Send>(
    windows: &[Signal],
    realized: &[f64],
    binding: &TaskBinding<Y>,
    cfg: &PsqiConfig,
    min_count: usize,
) -> CellOutcome {
    let mut records = Vec::with_capacity(windows.len());
    for (i, (score, metric)) in score_windows(windows, binding, cfg)
        .into_iter()
        .zip(realized)
        .enumerate()
    {
        match score {
            Ok(q) => records.push(EvalRecord::new(i.to_string(), q, *metric)),
            Err(e) => {
                return CellOutcome::Error {
                    reason: format!("window {i}: {e}"),
                }
            }
        }
    }
    match optimal_margin(&records, min_count) {
        Ok(m) => CellOutcome::Ok(m),
        Err(e @ Error::InfeasibleMargin { .. }) => CellOutcome::Infeasible {
            reason: e.to_string(),
        },
        Err(e) => CellOutcome::Error {
            reason: e.to_string(),
        },
    }
}
