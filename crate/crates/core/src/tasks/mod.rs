//! Downstream algorithms `f: X -> Y` and their pairing with a metric.

mod detect;
mod external;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{binary_accuracy, peak_f1, DEFAULT_TOLERANCE_S};
use crate::signal::Signal;

pub use detect::{
    detect_rpeaks_alternate, detect_rpeaks_reference, ALTERNATE_REFRACTORY_S,
    REFERENCE_REFRACTORY_S,
};
pub use external::{external_classifier, ExternalCommandSpec, DEFAULT_TIMEOUT_S, TIMEOUT_ENV};

/// Strictly increasing sample indices of detected events.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PeakList(Vec<usize>);

impl PeakList {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSignal(
                "peak indices must be strictly increasing".into(),
            ));
        }
        Ok(Self(indices))
    }

    /// Checks `new`'s invariant plus `index < n`.
    pub fn within(indices: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::InvalidSignal(format!(
                    "peak index {last} outside signal of {n} samples"
                )));
            }
        }
        Self::new(indices)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryLabel {
    Negative,
    Positive,
}

impl BinaryLabel {
    pub fn value(self) -> u8 {
        match self {
            BinaryLabel::Negative => 0,
            BinaryLabel::Positive => 1,
        }
    }

    pub fn from_value(v: u8) -> Result<Self> {
        match v {
            0 => Ok(BinaryLabel::Negative),
            1 => Ok(BinaryLabel::Positive),
            other => Err(Error::Range(format!(
                "binary label must be 0 or 1, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Peaks,
    Binary,
}

/// Built-in R-peak detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Reference,
    Alternate,
}

impl Detector {
    pub fn detect(self, x: &Signal) -> Result<PeakList> {
        match self {
            Detector::Reference => detect_rpeaks_reference(x),
            Detector::Alternate => detect_rpeaks_alternate(x),
        }
    }
}

type AlgorithmFn<Y> = dyn Fn(&Signal) -> Result<Y> + Send + Sync;
type MetricFn<Y> = dyn Fn(&Y, &Y, f64) -> f64 + Send + Sync;

/// An algorithm `f` together with the metric `h(prediction, reference)` used
/// to judge it. The metric also receives the sampling rate of the window the
/// outputs came from.
pub struct TaskBinding<Y> {
    algorithm: Arc<AlgorithmFn<Y>>,
    metric: Arc<MetricFn<Y>>,
    kind: OutputKind,
}

impl<Y> Clone for TaskBinding<Y> {
    fn clone(&self) -> Self {
        Self {
            algorithm: Arc::clone(&self.algorithm),
            metric: Arc::clone(&self.metric),
            kind: self.kind,
        }
    }
}

impl<Y> fmt::Debug for TaskBinding<Y> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TaskBinding")
            .field("kind", &self.kind)
            .finish()
    }
}

impl<Y> TaskBinding<Y> {
    pub fn new<A, M>(kind: OutputKind, algorithm: A, metric: M) -> Self
    where
        A: Fn(&Signal) -> Result<Y> + Send + Sync + 'static,
        M: Fn(&Y, &Y, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            algorithm: Arc::new(algorithm),
            metric: Arc::new(metric),
            kind,
        }
    }

    pub fn run(&self, x: &Signal) -> Result<Y> {
        (self.algorithm)(x)
    }

    pub fn metric(&self, prediction: &Y, reference: &Y, fs: f64) -> f64 {
        (self.metric)(prediction, reference, fs)
    }

    pub fn kind(&self) -> OutputKind {
        self.kind
    }
}

impl TaskBinding<PeakList> {
    /// Peak detection judged by tolerance-F1.
    pub fn rpeaks(detector: Detector, tolerance_s: f64) -> Self {
        Self::new(
            OutputKind::Peaks,
            move |x: &Signal| detector.detect(x),
            move |pred: &PeakList, reference: &PeakList, fs: f64| {
                peak_f1(reference, pred, tolerance_s, fs)
            },
        )
    }

    /// The reference detector with the 20 ms tolerance.
    pub fn default_rpeaks() -> Self {
        Self::rpeaks(Detector::Reference, DEFAULT_TOLERANCE_S)
    }
}

impl TaskBinding<BinaryLabel> {
    /// An external binary classifier judged by accuracy.
    pub fn external(spec: ExternalCommandSpec) -> Self {
        Self::new(
            OutputKind::Binary,
            move |x: &Signal| external_classifier(&spec, x),
            |pred: &BinaryLabel, truth: &BinaryLabel, _fs: f64| binary_accuracy(*pred, *truth),
        )
    }
}
