//! Built-in R-peak detectors.
//!
//! The reference detector is a Pan–Tompkins style pipeline on a zero-phase
//! bandpassed signal. The alternate detector uses a different band and a
//! rolling-percentile threshold; it only exists so detector agreement can be
//! measured between two independent methods. Every threshold is relative to
//! the signal itself, so both detectors are invariant to amplitude scaling.

use crate::error::{Error, Result};
use crate::filter::{design_butterworth, filtfilt, FilterSpec};
use crate::signal::Signal;

use super::PeakList;

const MIN_FS: f64 = 50.0;
const MIN_DURATION_S: f64 = 2.0;

pub const REFERENCE_REFRACTORY_S: f64 = 0.200;
pub const ALTERNATE_REFRACTORY_S: f64 = 0.250;

const INTEGRATION_S: f64 = 0.150;
const REFINE_S: f64 = 0.050;
const INIT_S: f64 = 2.0;
const SEARCHBACK_RR_FACTOR: f64 = 1.66;

const PERCENTILE_WINDOW_S: f64 = 2.0;
const PERCENTILE: f64 = 0.90;
/// Floor of the alternate detector's threshold as a fraction of the global
/// maximum of its feature.
const ALTERNATE_FLOOR: f64 = 0.01;

fn check_supported(x: &Signal) -> Result<()> {
    if x.fs() < MIN_FS {
        return Err(Error::UnsupportedSignal(format!(
            "sampling rate {} Hz below {MIN_FS} Hz",
            x.fs()
        )));
    }
    if x.duration_s() < MIN_DURATION_S {
        return Err(Error::UnsupportedSignal(format!(
            "duration {:.3} s below {MIN_DURATION_S} s",
            x.duration_s()
        )));
    }
    Ok(())
}

fn secs(s: f64, fs: f64) -> usize {
    (s * fs).round() as usize
}

fn bandpass(x: &Signal, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let coeffs = design_butterworth(&FilterSpec::bandpass(3, lo, hi), x.fs())?;
    filtfilt(&coeffs, x.samples())
}

/// Centered moving average over `width` samples (truncated at the edges).
fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    let half = width / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + width - half).min(n);
            (prefix[hi] - prefix[lo]) / width as f64
        })
        .collect()
}

/// Indices of local maxima (first sample of a plateau).
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        if x[i] > x[i - 1] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Keeps the highest candidates such that no two kept indices are closer
/// than `distance` samples. Ties go to the earlier index.
fn suppress_non_maxima(x: &[f64], candidates: &[usize], distance: usize) -> Vec<usize> {
    let mut order: Vec<usize> = candidates.to_vec();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in order {
        if kept.iter().all(|&k| k.abs_diff(c) >= distance) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

/// Moves each detection to the largest value of `x` within `radius`, then
/// merges detections that ended up closer than `refractory` (keeping the
/// larger one).
fn refine(x: &[f64], detections: &[usize], radius: usize, refractory: usize) -> Vec<usize> {
    let n = x.len();
    let mut refined: Vec<usize> = detections
        .iter()
        .map(|&d| {
            let lo = d.saturating_sub(radius);
            let hi = (d + radius).min(n - 1);
            (lo..=hi).fold(lo, |best, i| if x[i] > x[best] { i } else { best })
        })
        .collect();
    refined.sort_unstable();
    refined.dedup();
    let mut out: Vec<usize> = Vec::with_capacity(refined.len());
    for r in refined {
        match out.last_mut() {
            Some(last) if r - *last < refractory => {
                if x[r] > x[*last] {
                    *last = r;
                }
            }
            _ => out.push(r),
        }
    }
    out
}

/// Pan–Tompkins style detector: 5–15 Hz zero-phase bandpass, derivative,
/// squaring, 150 ms moving-window integration, adaptive signal/noise
/// thresholds with searchback, 200 ms refractory period, and a final
/// refinement to the bandpassed maximum within ±50 ms.
pub fn detect_rpeaks_reference(x: &Signal) -> Result<PeakList> {
    check_supported(x)?;
    let fs = x.fs();
    let bp = bandpass(x, 5.0, 15.0)?;
    let n = bp.len();

    let slope: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (bp[b] - bp[a]) * fs / (b - a) as f64
        })
        .collect();
    let squared: Vec<f64> = slope.iter().map(|v| v * v).collect();
    let mwi = moving_average(&squared, secs(INTEGRATION_S, fs).max(1));

    let refractory = secs(REFERENCE_REFRACTORY_S, fs).max(1);
    let candidates = suppress_non_maxima(&mwi, &local_maxima(&mwi), refractory);

    // Cold start from the first 2 s, or the whole window if that stretch is flat.
    let init = &mwi[..secs(INIT_S, fs).min(n)];
    let (mut peak_max, mut mean) = stats(init);
    if peak_max <= 0.0 {
        (peak_max, mean) = stats(&mwi);
    }
    if peak_max <= 0.0 {
        return Ok(PeakList::empty());
    }
    let mut signal_level = peak_max / 3.0;
    let mut noise_level = mean / 2.0;
    let mut thr1 = noise_level + 0.25 * (signal_level - noise_level);
    let mut thr2 = 0.5 * thr1;

    let mut accepted: Vec<usize> = Vec::new();
    let mut ci = 0;
    while ci < candidates.len() {
        let c = candidates[ci];
        let value = mwi[c];

        if let Some(rr) = mean_rr(&accepted) {
            let last = *accepted.last().unwrap();
            if (c - last) as f64 > SEARCHBACK_RR_FACTOR * rr {
                let missed = candidates[..ci]
                    .iter()
                    .copied()
                    .filter(|&k| k > last && k - last >= refractory && c - k >= refractory)
                    .fold(None, |best: Option<usize>, k| match best {
                        Some(b) if mwi[b] >= mwi[k] => Some(b),
                        _ => Some(k),
                    });
                if let Some(k) = missed.filter(|&k| mwi[k] > thr2) {
                    accepted.push(k);
                    signal_level = 0.25 * mwi[k] + 0.75 * signal_level;
                    thr1 = noise_level + 0.25 * (signal_level - noise_level);
                    thr2 = 0.5 * thr1;
                    continue;
                }
            }
        }

        let clear = accepted.last().is_none_or(|&l| c - l >= refractory);
        if value > thr1 && clear {
            accepted.push(c);
            signal_level = 0.125 * value + 0.875 * signal_level;
        } else {
            noise_level = 0.125 * value + 0.875 * noise_level;
        }
        thr1 = noise_level + 0.25 * (signal_level - noise_level);
        thr2 = 0.5 * thr1;
        ci += 1;
    }

    let peaks = refine(&bp, &accepted, secs(REFINE_S, fs), refractory);
    PeakList::within(peaks, n)
}

fn stats(x: &[f64]) -> (f64, f64) {
    let max = x.iter().copied().fold(0.0, f64::max);
    let mean = x.iter().sum::<f64>() / x.len().max(1) as f64;
    (max, mean)
}

/// Mean of the last (up to) eight RR intervals, in samples.
fn mean_rr(accepted: &[usize]) -> Option<f64> {
    if accepted.len() < 2 {
        return None;
    }
    let tail = &accepted[accepted.len().saturating_sub(9)..];
    let total = tail[tail.len() - 1] - tail[0];
    Some(total as f64 / (tail.len() - 1) as f64)
}

/// Local maxima of the squared 8–20 Hz bandpassed signal above the 90th
/// percentile of a centered 2 s window (and above 1% of the global maximum),
/// with a 250 ms refractory period.
pub fn detect_rpeaks_alternate(x: &Signal) -> Result<PeakList> {
    check_supported(x)?;
    let fs = x.fs();
    let bp = bandpass(x, 8.0, 20.0)?;
    let energy: Vec<f64> = bp.iter().map(|v| v * v).collect();
    let n = energy.len();
    let global_max = energy.iter().copied().fold(0.0, f64::max);
    if global_max <= 0.0 {
        return Ok(PeakList::empty());
    }
    let floor = ALTERNATE_FLOOR * global_max;
    let half = secs(PERCENTILE_WINDOW_S, fs) / 2;

    let mut scratch = Vec::with_capacity(2 * half + 1);
    let candidates: Vec<usize> = local_maxima(&energy)
        .into_iter()
        .filter(|&i| {
            if energy[i] <= floor {
                return false;
            }
            let (lo, hi) = (i.saturating_sub(half), (i + half + 1).min(n));
            scratch.clear();
            scratch.extend_from_slice(&energy[lo..hi]);
            let rank = ((PERCENTILE * scratch.len() as f64).ceil() as usize).max(1) - 1;
            let (_, p, _) = scratch.select_nth_unstable_by(rank, f64::total_cmp);
            energy[i] > *p
        })
        .collect();

    let peaks = suppress_non_maxima(
        &energy,
        &candidates,
        secs(ALTERNATE_REFRACTORY_S, fs).max(1),
    );
    PeakList::within(peaks, n)
}
