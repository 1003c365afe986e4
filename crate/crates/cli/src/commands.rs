use std::path::{Path, PathBuf};

use clap::Args;
use psqi_core::data::{load_dataset_with, write_dataset, AnnotatedWindow, Truth};
use psqi_core::eval::{
    binary_margin, binned_spearman, is_monotone, monotonicity_bins, optimal_margin,
    record_spearman, snr_sweep, CellOutcome,
};
use psqi_core::features::{extract_features, write_features, FeatureRow};
use psqi_core::metrics::{binary_accuracy, peak_f1, DEFAULT_TOLERANCE_S};
use psqi_core::report::{
    eval_records, read_scores, write_bins, write_scores, write_summary, EvaluationSummary, ScoreRow,
};
use psqi_core::tasks::ExternalCommandSpec;
use psqi_core::{
    psqi_score, synth_corpus, worst_case_signal, BinaryLabel, Error, PeakList, SynthSpec,
    TaskBinding,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::output::{psqi_config, sibling, write_to, Metadata};
use crate::{CliError, GlobalOpts, Task};

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub windows: usize,
    #[arg(long, default_value_t = 250.0)]
    pub fs: f64,
    #[arg(long, default_value_t = 50.0)]
    pub hr_min_bpm: f64,
    #[arg(long, default_value_t = 100.0)]
    pub hr_max_bpm: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub snr_min_db: f64,
    #[arg(long, default_value_t = 40.0, allow_negative_numbers = true)]
    pub snr_max_db: f64,
    /// Generate noise-free windows
    #[arg(long)]
    pub no_noise: bool,
    /// Fraction of windows with one attenuated beat
    #[arg(long, default_value_t = 0.0)]
    pub weak_fraction: f64,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Score table written by `psqi score`
    pub scores: PathBuf,
    #[arg(long, default_value_t = psqi_core::eval::DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value_t = psqi_core::eval::DEFAULT_MIN_COUNT)]
    pub min_count: usize,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub dataset: PathBuf,
    /// Global SNR grid in dB
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "15,25,35"
    )]
    pub gammas: Vec<f64>,
    /// Local SNR grid in dB
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "-10,10,30"
    )]
    pub betas: Vec<f64>,
    #[arg(long, default_value_t = psqi_core::eval::DEFAULT_MIN_COUNT)]
    pub min_count: usize,
}

/// Task output that can be compared against a window's annotation.
trait Realized: Clone + Send + Sync + 'static {
    fn realized(&self, truth: &Truth, fs: f64) -> Option<f64>;
}

impl Realized for PeakList {
    fn realized(&self, truth: &Truth, fs: f64) -> Option<f64> {
        truth
            .peaks()
            .map(|t| peak_f1(t, self, DEFAULT_TOLERANCE_S, fs))
    }
}

impl Realized for BinaryLabel {
    fn realized(&self, truth: &Truth, _fs: f64) -> Option<f64> {
        truth.label().map(|t| binary_accuracy(*self, t))
    }
}

fn external_spec(g: &GlobalOpts) -> Result<ExternalCommandSpec, CliError> {
    let cmd = g
        .external_cmd
        .as_deref()
        .ok_or_else(|| CliError::Usage("--task external needs --external-cmd".into()))?;
    Ok(ExternalCommandSpec::parse(cmd)?)
}

fn load(
    g: &GlobalOpts,
    dir: &Path,
    require_annotations: bool,
) -> Result<Vec<AnnotatedWindow>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Data {
            message: format!("{} is not a dataset directory", dir.display()),
        });
    }
    Ok(load_dataset_with(dir, g.window_s, require_annotations)?)
}

pub fn synth(g: &GlobalOpts, args: &SynthArgs) -> Result<(), CliError> {
    let out = g
        .out
        .as_deref()
        .ok_or_else(|| CliError::Usage("synth needs --out <directory>".into()))?;
    let spec = SynthSpec {
        n_windows: args.windows,
        fs: args.fs,
        window_s: g.window_s,
        hr_bpm: (args.hr_min_bpm, args.hr_max_bpm),
        weak_fraction: args.weak_fraction,
        snr_db: (!args.no_noise).then_some((args.snr_min_db, args.snr_max_db)),
        ..SynthSpec::default()
    };
    let corpus = synth_corpus(&spec, g.seed)?;
    write_dataset(out, &corpus, "mV")?;
    let meta = json!({ "spec": spec, "seed": g.seed, "prng": psqi_core::PRNG_ID });
    let path = out.join("corpus.json");
    let text = serde_json::to_string_pretty(&meta).map_err(Error::Json)?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::File { path, source: e })?;
    log::info!("wrote {} windows to {}", corpus.len(), out.display());
    Ok(())
}

fn score_rows<Y: Realized>(
    windows: &[AnnotatedWindow],
    binding: &TaskBinding<Y>,
    g: &GlobalOpts,
) -> Result<Vec<ScoreRow>, CliError> {
    let cfg = psqi_config(g);
    let rows: Vec<psqi_core::Result<ScoreRow>> = windows
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let r = psqi_score(&w.signal, binding, &cfg, i as u64)?;
            Ok(ScoreRow {
                window_id: w.window_id.clone(),
                sqi: r.score,
                metric: r.clean_output.realized(&w.truth, w.signal.fs()),
                degenerate: r.degenerate,
                failures: r.failures(),
                f_low_hz: r.worst_theta.map(|t| t.f_low),
                f_high_hz: r.worst_theta.map(|t| t.f_high),
                noise_seed: r.noise_seed,
            })
        })
        .collect();
    Ok(rows.into_iter().collect::<psqi_core::Result<_>>()?)
}

pub fn score(g: &GlobalOpts, dataset: &Path) -> Result<(), CliError> {
    let windows = load(g, dataset, false)?;
    let rows = match g.task {
        Task::Rpeaks => score_rows(&windows, &TaskBinding::default_rpeaks(), g)?,
        Task::External => score_rows(&windows, &TaskBinding::external(external_spec(g)?), g)?,
    };
    let out = g.out.as_deref();
    write_to(out, |w| write_scores(w, &rows))?;
    Metadata::new("score", g, &[dataset], json!({ "windows": rows.len() })).write_beside(out)
}

#[derive(Serialize)]
struct EvaluateDetails {
    bins: usize,
    min_count: usize,
    summary: EvaluationSummary,
    scores_metadata: Option<serde_json::Value>,
}

pub fn evaluate(g: &GlobalOpts, args: &EvaluateArgs) -> Result<(), CliError> {
    let file = std::fs::File::open(&args.scores).map_err(|e| Error::File {
        path: args.scores.clone(),
        source: e,
    })?;
    let rows = read_scores(file).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: args.scores.clone(),
            line,
            message,
        },
        other => other,
    })?;
    let records = eval_records(&rows)?;
    let margin = optimal_margin(&records, args.min_count).map_err(|e| match e {
        Error::InfeasibleMargin { min_count, .. } => CliError::Data {
            message: format!(
                "{e}; a margin needs at least {} windows whose scores split into two groups \
                 of {min_count} or more: score more windows or lower --min-count",
                2 * min_count
            ),
        },
        e => e.into(),
    })?;
    let bins = monotonicity_bins(&records, args.bins)?;
    let binary = records
        .iter()
        .all(|r| (r.sqi == 0.0 || r.sqi == 1.0) && (r.metric == 0.0 || r.metric == 1.0));
    let summary = EvaluationSummary {
        n_records: records.len(),
        monotone: is_monotone(&bins),
        spearman_binned: binned_spearman(&bins).ok(),
        spearman_records: record_spearman(&records).ok(),
        margin,
        binary_margin: if binary {
            binary_margin(&records).ok()
        } else {
            None
        },
    };

    let out = g.out.as_deref();
    write_to(out, |w| write_summary(w, &summary))?;
    if let Some(out) = out {
        write_to(Some(&sibling(out, "bins")), |w| write_bins(w, &bins))?;
    }
    let scores_metadata = std::fs::read_to_string(args.scores.with_extension("json"))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok());
    let details = EvaluateDetails {
        bins: args.bins,
        min_count: args.min_count,
        summary,
        scores_metadata,
    };
    Metadata::new("evaluate", g, &[&args.scores], details).write_beside(out)
}

fn sweep_with<Y: Realized>(
    g: &GlobalOpts,
    args: &SweepArgs,
    windows: &[AnnotatedWindow],
    binding: &TaskBinding<Y>,
) -> Result<psqi_core::SweepResult, CliError> {
    let realized: Vec<psqi_core::Result<f64>> = windows
        .par_iter()
        .map(|w| {
            let y = binding.run(&w.signal)?;
            y.realized(&w.truth, w.signal.fs()).ok_or_else(|| {
                Error::AnnotationMissing(format!(
                    "window {} lacks a matching annotation",
                    w.window_id
                ))
            })
        })
        .collect();
    let realized = realized
        .into_iter()
        .collect::<psqi_core::Result<Vec<_>>>()?;
    let signals: Vec<_> = windows.iter().map(|w| w.signal.clone()).collect();
    Ok(snr_sweep(
        &signals,
        &realized,
        binding,
        &args.gammas,
        &args.betas,
        &psqi_config(g),
        args.min_count,
    )?)
}

pub fn sweep(g: &GlobalOpts, args: &SweepArgs) -> Result<(), CliError> {
    if args.gammas.is_empty() || args.betas.is_empty() {
        return Err(CliError::Usage(
            "--gammas and --betas must be nonempty".into(),
        ));
    }
    let windows = load(g, &args.dataset, true)?;
    let result = match g.task {
        Task::Rpeaks => sweep_with(g, args, &windows, &TaskBinding::default_rpeaks())?,
        Task::External => sweep_with(g, args, &windows, &TaskBinding::external(external_spec(g)?))?,
    };
    let out = g.out.as_deref();
    write_to(out, |w| psqi_core::report::write_sweep(w, &result))?;
    let argmax = result.argmax.map(|(i, j)| {
        let cell = &result.cells[i][j];
        json!({
            "gamma_db": cell.gamma_db,
            "beta_db": cell.beta_db,
            "delta_star": cell.outcome.delta_star(),
        })
    });
    let cells: Vec<_> = result
        .cells
        .iter()
        .flatten()
        .map(|c| match &c.outcome {
            CellOutcome::Ok(m) => {
                json!({ "gamma_db": c.gamma_db, "beta_db": c.beta_db, "margin": m })
            }
            other => json!({ "gamma_db": c.gamma_db, "beta_db": c.beta_db, "outcome": other }),
        })
        .collect();
    let details = json!({
        "gammas": args.gammas,
        "betas": args.betas,
        "min_count": args.min_count,
        "windows": windows.len(),
        "argmax": argmax,
        "cells": cells,
    });
    Metadata::new("sweep", g, &[&args.dataset], details).write_beside(out)
}

fn feature_rows<Y: Realized>(
    windows: &[AnnotatedWindow],
    binding: &TaskBinding<Y>,
) -> Result<Vec<FeatureRow>, CliError> {
    let rows: Vec<psqi_core::Result<FeatureRow>> = windows
        .par_iter()
        .map(|w| {
            let features = extract_features(&w.signal)?;
            let metric = match w.truth {
                Truth::Unknown => None,
                _ => binding.run(&w.signal)?.realized(&w.truth, w.signal.fs()),
            };
            Ok(FeatureRow {
                id: w.window_id.clone(),
                features,
                metric,
            })
        })
        .collect();
    Ok(rows.into_iter().collect::<psqi_core::Result<_>>()?)
}

pub fn features(g: &GlobalOpts, dataset: &Path) -> Result<(), CliError> {
    let windows = load(g, dataset, false)?;
    let rows = match g.task {
        Task::Rpeaks => feature_rows(&windows, &TaskBinding::default_rpeaks())?,
        Task::External => feature_rows(&windows, &TaskBinding::external(external_spec(g)?))?,
    };
    let out = g.out.as_deref();
    write_to(out, |w| write_features(w, &rows))?;
    Metadata::new("features", g, &[dataset], json!({ "windows": rows.len() })).write_beside(out)
}

fn perturb_with<Y: Clone + Send>(
    g: &GlobalOpts,
    dataset: &Path,
    windows: &[AnnotatedWindow],
    index: usize,
    binding: &TaskBinding<Y>,
) -> Result<(), CliError> {
    let cfg = psqi_config(g);
    let w = &windows[index];
    let result = psqi_score(&w.signal, binding, &cfg, index as u64)?;
    let perturbed = worst_case_signal(&w.signal, &result, &cfg)?;
    let out = g.out.as_deref();
    write_to(out, |out| {
        let fs = perturbed.fs();
        let mut text = String::from("t,value\n");
        for (i, v) in perturbed.samples().iter().enumerate() {
            text.push_str(&format!("{},{v}\n", i as f64 / fs));
        }
        out.write_all(text.as_bytes())?;
        Ok(())
    })?;
    let details = json!({
        "window_id": w.window_id,
        "window_index": index,
        "fs_hz": w.signal.fs(),
        "sqi": result.score,
        "degenerate": result.degenerate,
        "worst_theta": result.worst_theta,
        "noise_seed": result.noise_seed,
    });
    Metadata::new("perturb", g, &[dataset], details).write_beside(out)
}

pub fn perturb(g: &GlobalOpts, dataset: &Path, window: &str) -> Result<(), CliError> {
    let windows = load(g, dataset, false)?;
    let index = windows
        .iter()
        .position(|w| w.window_id == window)
        .or_else(|| window.parse::<usize>().ok().filter(|&i| i < windows.len()))
        .ok_or_else(|| CliError::Data {
            message: format!("no window {window:?} among {} windows", windows.len()),
        })?;
    match g.task {
        Task::Rpeaks => perturb_with(g, dataset, &windows, index, &TaskBinding::default_rpeaks()),
        Task::External => perturb_with(
            g,
            dataset,
            &windows,
            index,
            &TaskBinding::external(external_spec(g)?),
        ),
    }
}
