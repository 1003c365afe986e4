//! Welch power spectral density.

use rustfft::{num_complex::Complex, FftPlanner};

/// One-sided PSD estimate.
#[derive(Debug, Clone)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Psd {
    /// Sum of power over bins with `lo <= f <= hi`.
    pub fn band_sum(&self, lo: f64, hi: f64) -> f64 {
        self.band(lo, hi).map(|(_, p)| p).sum()
    }

    /// `sum f^k P(f)` over `lo <= f <= hi`.
    pub fn moment(&self, k: i32, lo: f64, hi: f64) -> f64 {
        self.band(lo, hi).map(|(f, p)| f.powi(k) * p).sum()
    }

    fn band(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(move |(f, _)| **f >= lo && **f <= hi)
            .map(|(f, p)| (*f, *p))
    }
}

/// Welch estimate with periodic Hann segments of `segment_s` seconds, 50%
/// overlap and per-segment mean removal. Signals shorter than one segment
/// use a single segment spanning the whole signal.
pub fn welch(x: &[f64], fs: f64, segment_s: f64) -> Psd {
    let n = x.len();
    let len = ((segment_s * fs).round() as usize)
        .clamp(2, n.max(2))
        .min(n);
    let step = (len / 2).max(1);
    let window: Vec<f64> = (0..len)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / len as f64).cos())
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);

    let bins = len / 2 + 1;
    let mut power = vec![0.0; bins];
    let mut segments = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    let mut start = 0;
    while start + len <= n {
        let seg = &x[start..start + len];
        let mean = seg.iter().sum::<f64>() / len as f64;
        for ((b, v), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, p) in power.iter_mut().enumerate() {
            let mut v = buf[k].norm_sqr() / (fs * window_power);
            if k != 0 && !(len.is_multiple_of(2) && k == len / 2) {
                v *= 2.0;
            }
            *p += v;
        }
        segments += 1;
        start += step;
    }
    for p in &mut power {
        *p /= segments.max(1) as f64;
    }
    let freqs = (0..bins).map(|k| k as f64 * fs / len as f64).collect();
    Psd { freqs, power }
}
