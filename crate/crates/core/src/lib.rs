//! Perturbation-based signal quality indices for univariate medical time
//! series.
//!
//! The quality of a window `x` for a task `f` judged by a metric `h` is the
//! worst value of `h(f(p(x)), f(x))` over band-limited Gaussian
//! perturbations `p` that respect a global and a per-sample SNR budget. The
//! search over noise bands runs a small CMA-ES.
//!
//! ```no_run
//! use psqi_core::{psqi_score, PsqiConfig, Signal, TaskBinding};
//!
//! let x = Signal::new(vec![0.0; 2500], 250.0)?;
//! let result = psqi_score(&x, &TaskBinding::default_rpeaks(), &PsqiConfig::default(), 0)?;
//! println!("q = {}", result.score);
//! # Ok::<(), psqi_core::Error>(())
//! ```

pub mod cmaes;
pub mod data;
pub mod engine;
pub mod error;
pub mod eval;
pub mod features;
pub mod filter;
pub mod metrics;
pub mod perturbation;
pub mod report;
pub mod rng;
pub mod signal;
pub mod spectral;
pub mod tasks;

pub use cmaes::{decode, minimize, CmaConfig, Minimum};
pub use data::{load_dataset, segment, synth_corpus, AnnotatedWindow, SynthSpec, Truth};
pub use engine::{psqi_score, worst_case_signal, PsqiConfig, PsqiResult};
pub use error::{Error, Result};
pub use eval::{
    binary_margin, is_monotone, monotonicity_bins, optimal_margin, separation_margin, snr_sweep,
    spearman, BinStat, EvalRecord, MarginResult, SweepResult,
};
pub use features::{extract_features, FeatureVector};
pub use filter::{design_butterworth, filtfilt, FilterCoefficients, FilterSpec};
pub use metrics::{binary_accuracy, match_peaks, peak_f1, MatchResult};
pub use perturbation::{apply_perturbation, sample_noise, PerturbationParams};
pub use rng::PRNG_ID;
pub use signal::{global_snr, useful_component, Signal, SnrConfig};
pub use tasks::{BinaryLabel, Detector, OutputKind, PeakList, TaskBinding};
