//! Downstream performance metrics: tolerance-matched F1 for event sets and
//! binary accuracy.

use serde::{Deserialize, Serialize};

use crate::tasks::{BinaryLabel, PeakList};

/// Beat-detection tolerance, seconds.
pub const DEFAULT_TOLERANCE_S: f64 = 0.020;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// `(reference index, detection index)` sample positions.
    pub matched_pairs: Vec<(usize, usize)>,
}

/// Tolerance in samples, rounded half away from zero.
pub fn tolerance_samples(tolerance_s: f64, fs: f64) -> usize {
    (tolerance_s * fs).round().max(0.0) as usize
}

/// Greedy chronological one-to-one matching.
///
/// References are visited in order; each takes the nearest detection that
/// is still unmatched and lies within the tolerance (the earlier detection
/// on equal distance).
pub fn match_peaks(
    reference: &PeakList,
    detected: &PeakList,
    tolerance_s: f64,
    fs: f64,
) -> MatchResult {
    let tol = tolerance_samples(tolerance_s, fs);
    let det = detected.indices();
    let mut used = vec![false; det.len()];
    let mut pairs = Vec::new();
    for &r in reference.indices() {
        let start = det.partition_point(|&d| d + tol < r);
        let mut pick: Option<(usize, usize)> = None;
        for (j, &d) in det.iter().enumerate().skip(start) {
            if d > r + tol {
                break;
            }
            if used[j] {
                continue;
            }
            let dist = d.abs_diff(r);
            if pick.is_none_or(|(_, best)| dist < best) {
                pick = Some((j, dist));
            }
        }
        if let Some((j, _)) = pick {
            used[j] = true;
            pairs.push((r, det[j]));
        }
    }
    let tp = pairs.len();
    MatchResult {
        tp,
        fp: det.len() - tp,
        fn_: reference.len() - tp,
        matched_pairs: pairs,
    }
}

/// `2 tp / (2 tp + fp + fn)`, and 1.0 when both sets are empty.
pub fn f1_score(m: &MatchResult) -> f64 {
    let denom = 2 * m.tp + m.fp + m.fn_;
    if denom == 0 {
        1.0
    } else {
        (2 * m.tp) as f64 / denom as f64
    }
}

/// Tolerance-F1 of `detected` against `reference`.
pub fn peak_f1(reference: &PeakList, detected: &PeakList, tolerance_s: f64, fs: f64) -> f64 {
    f1_score(&match_peaks(reference, detected, tolerance_s, fs))
}

pub fn binary_accuracy(pred: BinaryLabel, truth: BinaryLabel) -> f64 {
    if pred == truth {
        1.0
    } else {
        0.0
    }
}
