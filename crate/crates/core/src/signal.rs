//! Uniformly sampled signals and the SNR quantities that bound perturbations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{design_butterworth, filtfilt, FilterSpec};

/// Cutoff of the baseline-removal highpass, Hz.
pub const BASELINE_CUTOFF_HZ: f64 = 0.5;
/// Order of the baseline-removal highpass.
pub const BASELINE_ORDER: usize = 6;

/// A univariate, uniformly sampled time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    samples: Vec<f64>,
    fs: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidSignal(format!("sampling rate {fs} Hz")));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidSignal(format!(
                "{} samples, need at least 2",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, fs })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    pub fn energy(&self) -> f64 {
        energy(&self.samples)
    }

    /// Same sampling rate, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.fs)
    }
}

pub(crate) fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Minimal global and local SNR, configured in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrConfig {
    pub gamma_db: f64,
    pub beta_db: f64,
    /// Lower bound on the per-sample deviation bound, in signal units.
    #[serde(default)]
    pub local_floor: f64,
}

impl Default for SnrConfig {
    fn default() -> Self {
        Self {
            gamma_db: 25.0,
            beta_db: 10.0,
            local_floor: 0.0,
        }
    }
}

impl SnrConfig {
    pub fn new(gamma_db: f64, beta_db: f64) -> Self {
        Self {
            gamma_db,
            beta_db,
            local_floor: 0.0,
        }
    }

    pub fn gamma(&self) -> f64 {
        db_to_linear(self.gamma_db)
    }

    pub fn beta(&self) -> f64 {
        db_to_linear(self.beta_db)
    }

    pub fn validate(&self) -> Result<()> {
        let (g, b) = (self.gamma(), self.beta());
        if !(g.is_finite() && g > 0.0 && b.is_finite() && b > 0.0) {
            return Err(Error::Config(format!(
                "SNR levels must map to finite positive ratios (gamma {} dB, beta {} dB)",
                self.gamma_db, self.beta_db
            )));
        }
        if !(self.local_floor.is_finite() && self.local_floor >= 0.0) {
            return Err(Error::Config(format!(
                "local floor must be nonnegative, got {}",
                self.local_floor
            )));
        }
        Ok(())
    }
}

/// The part of `x` that carries useful signal energy: `x` after a zero-phase
/// 6th-order 0.5 Hz Butterworth highpass, which strips offsets and baseline
/// wander.
pub fn useful_component(x: &Signal) -> Result<Signal> {
    let coeffs = design_butterworth(
        &FilterSpec::highpass(BASELINE_ORDER, BASELINE_CUTOFF_HZ),
        x.fs(),
    )?;
    let y = filtfilt(&coeffs, x.samples())?;
    Signal::new(y, x.fs())
}

/// Global SNR `||x_filt||^2 / ||delta||^2` as a linear ratio.
pub fn global_snr(x_filt: &[f64], delta: &[f64]) -> Result<f64> {
    if x_filt.len() != delta.len() {
        return Err(Error::LengthMismatch(x_filt.len(), delta.len()));
    }
    let noise = energy(delta);
    if noise == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    Ok(energy(x_filt) / noise)
}

/// Per-sample bound on `|p(x)_i - x_i|`: `max(|x_filt_i| / sqrt(beta), floor)`.
pub fn local_deviation_bound(x_filt: &[f64], beta_linear: f64, floor: f64) -> Vec<f64> {
    let inv_sqrt_beta = beta_linear.sqrt().recip();
    x_filt
        .iter()
        .map(|v| (v.abs() * inv_sqrt_beta).max(floor))
        .collect()
}
