//! Synthetic ECG-like corpus with exact R-peak ground truth.

use serde::{Deserialize, Serialize};

use super::{window_len, AnnotatedWindow, Source, Truth};
use crate::error::{Error, Result};
use crate::filter::{design_butterworth, filtfilt, FilterSpec};
use crate::rng::{mix_seed, GaussianStream};
use crate::signal::{db_to_linear, energy, useful_component, Signal};
use crate::tasks::PeakList;

/// Appended to the id of windows carrying an attenuated beat.
pub const WEAK_SUFFIX: &str = "-weak";

const SYNTH_STREAM: u64 = 0x7379_6e74_6800_0003;
const NOISE_ORDER: usize = 4;
/// R peaks stay this far from both window edges so no annotated beat is
/// truncated.
const EDGE_MARGIN_S: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_windows: usize,
    pub fs: f64,
    pub window_s: f64,
    /// Per-window heart rate is drawn uniformly from this range.
    pub hr_bpm: (f64, f64),
    /// Standard deviation of each RR interval, as a fraction of the mean.
    pub rr_jitter: f64,
    pub r_sigma_s: f64,
    /// Zero disables T-waves.
    pub t_amplitude: f64,
    pub t_sigma_s: f64,
    pub t_delay_s: f64,
    /// Standard deviation of R amplitudes around 1.
    pub amplitude_jitter: f64,
    /// Fraction of windows (the last ones) whose middle beat has
    /// `weak_amplitude`.
    pub weak_fraction: f64,
    pub weak_amplitude: f64,
    /// Per-window SNR range in dB; `None` disables noise.
    pub snr_db: Option<(f64, f64)>,
    pub noise_band_hz: (f64, f64),
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_windows: 20,
            fs: 250.0,
            window_s: 10.0,
            hr_bpm: (50.0, 100.0),
            rr_jitter: 0.03,
            r_sigma_s: 0.010,
            t_amplitude: 0.25,
            t_sigma_s: 0.040,
            t_delay_s: 0.300,
            amplitude_jitter: 0.05,
            weak_fraction: 0.0,
            weak_amplitude: 0.25,
            snr_db: Some((0.0, 40.0)),
            noise_band_hz: (1.0, 40.0),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return bad(format!("fs must be positive, got {}", self.fs));
        }
        if !(self.window_s.is_finite() && window_len(self.window_s, self.fs) >= 2) {
            return bad(format!("window of {} s is too short", self.window_s));
        }
        let (lo, hi) = self.hr_bpm;
        if !(30.0..=220.0).contains(&lo) || !(30.0..=220.0).contains(&hi) || lo > hi {
            return bad(format!("heart rate range {lo}..{hi} bpm outside 30..220"));
        }
        if let Some((a, b)) = self.snr_db {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return bad(format!("SNR range {a}..{b} dB must be finite and ordered"));
            }
        }
        let (f1, f2) = self.noise_band_hz;
        if !(f1 > 0.0 && f1 < f2 && f2 < self.fs / 2.0) {
            return bad(format!(
                "noise band {f1}..{f2} Hz invalid at {} Hz",
                self.fs
            ));
        }
        let nonneg = [
            self.rr_jitter,
            self.t_amplitude,
            self.amplitude_jitter,
            self.weak_amplitude,
            self.t_delay_s,
        ];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("jitters, amplitudes and delays must be nonnegative".into());
        }
        if !(self.r_sigma_s > 0.0 && self.t_sigma_s > 0.0) {
            return bad("bump widths must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.weak_fraction) {
            return bad(format!(
                "weak fraction {} outside [0, 1]",
                self.weak_fraction
            ));
        }
        Ok(())
    }

    fn weak_windows(&self) -> usize {
        (self.weak_fraction * self.n_windows as f64).round() as usize
    }
}

fn add_bump(x: &mut [f64], center: f64, sigma: f64, amplitude: f64) {
    let reach = (5.0 * sigma).ceil() as i64;
    let c = center.round() as i64;
    for i in (c - reach).max(0)..=(c + reach).min(x.len() as i64 - 1) {
        let d = (i as f64 - center) / sigma;
        x[i as usize] += amplitude * (-0.5 * d * d).exp();
    }
}

fn clean_window(spec: &SynthSpec, rng: &mut GaussianStream, weak: bool) -> (Vec<f64>, Vec<usize>) {
    let n = window_len(spec.window_s, spec.fs);
    let hr = rng.uniform_in(spec.hr_bpm.0, spec.hr_bpm.1);
    let rr = 60.0 / hr;
    let mut beats = Vec::new();
    let last = spec.window_s - EDGE_MARGIN_S;
    let mut t = EDGE_MARGIN_S + rng.uniform_in(0.0, rr);
    while t <= last {
        beats.push((t * spec.fs).round() as usize);
        let step = rr * (1.0 + spec.rr_jitter * rng.normal());
        t += step.max(60.0 / 220.0);
    }
    let weak_beat = (weak && !beats.is_empty()).then_some(beats.len() / 2);

    let mut x = vec![0.0; n];
    let (r_sigma, t_sigma) = (spec.r_sigma_s * spec.fs, spec.t_sigma_s * spec.fs);
    for (k, &b) in beats.iter().enumerate() {
        let jitter = spec.amplitude_jitter * rng.normal();
        let amplitude = if weak_beat == Some(k) {
            spec.weak_amplitude
        } else {
            (1.0 + jitter).max(0.5)
        };
        add_bump(&mut x, b as f64, r_sigma, amplitude);
        if spec.t_amplitude > 0.0 {
            let center = b as f64 + spec.t_delay_s * spec.fs;
            add_bump(&mut x, center, t_sigma, spec.t_amplitude * amplitude);
        }
    }
    (x, beats)
}

/// Generates the corpus. Window `i` draws from its own stream derived from
/// `seed` and `i`.
pub fn synth_corpus(spec: &SynthSpec, seed: u64) -> Result<Vec<AnnotatedWindow>> {
    spec.validate()?;
    let noise_filter = design_butterworth(
        &FilterSpec::bandpass(NOISE_ORDER, spec.noise_band_hz.0, spec.noise_band_hz.1),
        spec.fs,
    )?;
    let first_weak = spec.n_windows - spec.weak_windows();
    let mut out = Vec::with_capacity(spec.n_windows);
    for i in 0..spec.n_windows {
        let mut rng = GaussianStream::new(mix_seed(seed, i as u64, SYNTH_STREAM));
        let weak = i >= first_weak;
        let (mut x, beats) = clean_window(spec, &mut rng, weak);
        if let Some((lo, hi)) = spec.snr_db {
            let snr = db_to_linear(rng.uniform_in(lo, hi));
            let shaped = filtfilt(&noise_filter, &rng.normals(x.len()))?;
            let x_filt = useful_component(&Signal::new(x.clone(), spec.fs)?)?;
            let (signal_energy, noise_energy) = (x_filt.energy(), energy(&shaped));
            if signal_energy > 0.0 && noise_energy > 0.0 {
                let scale = (signal_energy / (snr * noise_energy)).sqrt();
                for (v, d) in x.iter_mut().zip(&shaped) {
                    *v += scale * d;
                }
            }
        }
        let n = x.len();
        let id = format!("synth-{i:04}{}", if weak { WEAK_SUFFIX } else { "" });
        out.push(AnnotatedWindow::new(
            id.clone(),
            Signal::new(x, spec.fs)?,
            Truth::Peaks(PeakList::within(beats, n)?),
            Source {
                file: id,
                offset: 0,
            },
        )?);
    }
    Ok(out)
}
