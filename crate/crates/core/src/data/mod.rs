//! Annotated windows, windowing of long records, file-based datasets and the
//! synthetic ECG-like corpus.

mod dataset;
mod synth;

pub use dataset::{load_dataset, load_dataset_with, write_dataset, RecordMeta};
pub use synth::{synth_corpus, SynthSpec, WEAK_SUFFIX};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::peak_f1;
use crate::signal::Signal;
use crate::tasks::{BinaryLabel, PeakList};

pub const DEFAULT_WINDOW_S: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    Peaks(PeakList),
    Label(BinaryLabel),
    /// No annotation available; enough for scoring, not for evaluation.
    Unknown,
}

impl Truth {
    pub fn peaks(&self) -> Option<&PeakList> {
        match self {
            Truth::Peaks(p) => Some(p),
            _ => None,
        }
    }

    pub fn label(&self) -> Option<BinaryLabel> {
        match self {
            Truth::Label(l) => Some(*l),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub file: String,
    /// First sample of the window in the source record.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedWindow {
    pub window_id: String,
    pub signal: Signal,
    pub truth: Truth,
    pub source: Source,
}

impl AnnotatedWindow {
    pub fn new(window_id: String, signal: Signal, truth: Truth, source: Source) -> Result<Self> {
        if let Truth::Peaks(p) = &truth {
            if p.indices().last().is_some_and(|&i| i >= signal.len()) {
                return Err(Error::Range(format!(
                    "window {window_id}: peak index beyond {} samples",
                    signal.len()
                )));
            }
        }
        Ok(Self {
            window_id,
            signal,
            truth,
            source,
        })
    }

    /// Tolerance-F1 of `detected` against the annotated peaks.
    pub fn peak_f1(&self, detected: &PeakList, tolerance_s: f64) -> Result<f64> {
        let truth = self.truth.peaks().ok_or_else(|| {
            Error::AnnotationMissing(format!("window {} has no peak annotations", self.window_id))
        })?;
        Ok(peak_f1(truth, detected, tolerance_s, self.signal.fs()))
    }
}

/// Window length in samples for `window_s` seconds.
pub fn window_len(window_s: f64, fs: f64) -> usize {
    (window_s * fs).round() as usize
}

/// Splits `x` into contiguous non-overlapping windows of `window_s` seconds.
/// The trailing remainder is dropped and peaks are moved to window-local
/// indices. `name` prefixes the window ids.
pub fn segment(
    x: &Signal,
    window_s: f64,
    truth: &Truth,
    name: &str,
) -> Result<Vec<AnnotatedWindow>> {
    if !(window_s.is_finite() && window_s > 0.0) {
        return Err(Error::Config(format!(
            "window length must be positive, got {window_s}"
        )));
    }
    let len = window_len(window_s, x.fs());
    if len < 2 {
        return Err(Error::Config(format!(
            "window of {window_s} s is shorter than two samples at {} Hz",
            x.fs()
        )));
    }
    let count = x.len() / len;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let start = k * len;
        let signal = Signal::new(x.samples()[start..start + len].to_vec(), x.fs())?;
        let local = match truth {
            Truth::Peaks(p) => Truth::Peaks(PeakList::new(
                p.indices()
                    .iter()
                    .filter(|&&i| i >= start && i < start + len)
                    .map(|&i| i - start)
                    .collect(),
            )?),
            other => other.clone(),
        };
        out.push(AnnotatedWindow::new(
            format!("{name}#{k}"),
            signal,
            local,
            Source {
                file: name.to_owned(),
                offset: start,
            },
        )?);
    }
    Ok(out)
}
