//! Butterworth filter design as cascaded second-order sections, and
//! forward-backward (zero-phase) filtering.
//!
//! Design follows the classical route: analog Butterworth prototype poles,
//! a frequency transformation to lowpass/highpass/bandpass with prewarped
//! cutoffs, then the bilinear transform. Poles and zeros are grouped into
//! biquads and each biquad is normalized to unit gain at a reference
//! frequency (DC, Nyquist, or the band center), so no single section carries
//! a tiny overall gain constant.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Frequency band of a filter, cutoffs in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Band {
    Lowpass(f64),
    Highpass(f64),
    Bandpass(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Lowpass,
    Highpass,
    Bandpass,
}

/// Butterworth design request.
///
/// `order` is the order of the lowpass prototype. A bandpass of order `n`
/// therefore has `2n` poles (the usual convention of `scipy.signal.butter`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub order: usize,
    pub band: Band,
}

impl FilterSpec {
    pub fn lowpass(order: usize, cutoff_hz: f64) -> Self {
        Self {
            order,
            band: Band::Lowpass(cutoff_hz),
        }
    }

    pub fn highpass(order: usize, cutoff_hz: f64) -> Self {
        Self {
            order,
            band: Band::Highpass(cutoff_hz),
        }
    }

    pub fn bandpass(order: usize, low_hz: f64, high_hz: f64) -> Self {
        Self {
            order,
            band: Band::Bandpass(low_hz, high_hz),
        }
    }

    pub fn kind(&self) -> FilterKind {
        match self.band {
            Band::Lowpass(_) => FilterKind::Lowpass,
            Band::Highpass(_) => FilterKind::Highpass,
            Band::Bandpass(..) => FilterKind::Bandpass,
        }
    }

    pub fn cutoffs_hz(&self) -> Vec<f64> {
        match self.band {
            Band::Lowpass(f) | Band::Highpass(f) => vec![f],
            Band::Bandpass(lo, hi) => vec![lo, hi],
        }
    }

    fn validate(&self, fs: f64) -> Result<()> {
        if self.order < 1 {
            return Err(Error::InvalidOrder(self.order));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidCutoff(format!(
                "sampling rate {fs} Hz is not positive"
            )));
        }
        let nyquist = fs / 2.0;
        for f in self.cutoffs_hz() {
            if !(f.is_finite() && f > 0.0 && f < nyquist) {
                return Err(Error::InvalidCutoff(format!(
                    "{f} Hz is outside (0, {nyquist}) Hz"
                )));
            }
        }
        if let Band::Bandpass(lo, hi) = self.band {
            if lo >= hi {
                return Err(Error::InvalidCutoff(format!(
                    "bandpass needs low < high, got ({lo}, {hi}) Hz"
                )));
            }
        }
        Ok(())
    }
}

/// One biquad `b(z)/a(z)` with `a[0] == 1`. First-order sections have
/// `b[2] == a[2] == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sos {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Sos {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z_inv2 = z_inv * z_inv;
        let num = self.b[0] + self.b[1] * z_inv + self.b[2] * z_inv2;
        let den = self.a[0] + self.a[1] * z_inv + self.a[2] * z_inv2;
        num / den
    }

    /// Poles of the section (one or two).
    pub fn poles(&self) -> Vec<Complex64> {
        let (a1, a2) = (self.a[1], self.a[2]);
        if a2 == 0.0 {
            if a1 == 0.0 {
                return Vec::new();
            }
            return vec![Complex64::new(-a1, 0.0)];
        }
        let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
        vec![(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }

    /// Steady-state transposed direct form II state for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
        [gain - b0, b2 - a2 * gain]
    }
}

/// A realized filter: cascaded second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoefficients {
    pub sections: Vec<Sos>,
    /// Number of poles of the cascade.
    pub order: usize,
}

impl FilterCoefficients {
    /// The unity filter `b = [1], a = [1]`.
    pub fn identity() -> Self {
        Self {
            sections: vec![Sos {
                b: [1.0, 0.0, 0.0],
                a: [1.0, 0.0, 0.0],
            }],
            order: 0,
        }
    }

    /// Complex frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64, fs: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / fs;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    /// Single-pass magnitude response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, fs: f64) -> f64 {
        self.response(freq_hz, fs).norm()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }

    /// Edge padding used by [`filtfilt`] before clamping to the signal length.
    pub fn nominal_pad_len(&self) -> usize {
        3 * (2 * self.order + 1)
    }
}

/// Designs a digital Butterworth filter for sampling rate `fs`.
pub fn design_butterworth(spec: &FilterSpec, fs: f64) -> Result<FilterCoefficients> {
    spec.validate(fs)?;
    let n = spec.order;
    let prototype: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, PI * (2 * k + n + 1) as f64 / (2 * n) as f64))
        .collect();
    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();

    // Analog poles and zeros after the band transformation, plus the digital
    // frequency (rad/sample) where the ideal response is exactly 1.
    let (analog_zeros, analog_poles, w_ref): (Vec<Complex64>, Vec<Complex64>, f64) = match spec.band
    {
        Band::Lowpass(fc) => {
            let wc = warp(fc);
            (Vec::new(), prototype.iter().map(|p| p * wc).collect(), 0.0)
        }
        Band::Highpass(fc) => {
            let wc = warp(fc);
            (
                vec![Complex64::new(0.0, 0.0); n],
                prototype.iter().map(|p| wc / p).collect(),
                PI,
            )
        }
        Band::Bandpass(lo, hi) => {
            let (w1, w2) = (warp(lo), warp(hi));
            let bw = w2 - w1;
            let w0 = (w1 * w2).sqrt();
            let mut poles = Vec::with_capacity(2 * n);
            for p in &prototype {
                let half = p * (bw / 2.0);
                let root = (half * half - w0 * w0).sqrt();
                poles.push(half + root);
                poles.push(half - root);
            }
            let w_center = 2.0 * (w0 / (2.0 * fs)).atan();
            (vec![Complex64::new(0.0, 0.0); n], poles, w_center)
        }
    };

    let fs2 = 2.0 * fs;
    let bilinear = |s: &Complex64| (fs2 + s) / (fs2 - s);
    let mut zeros: Vec<f64> = analog_zeros.iter().map(|z| bilinear(z).re).collect();
    let poles: Vec<Complex64> = analog_poles.iter().map(bilinear).collect();
    zeros.extend(std::iter::repeat_n(-1.0, poles.len() - analog_zeros.len()));

    let sections = group_sections(&poles, zeros, w_ref);
    Ok(FilterCoefficients {
        sections,
        order: poles.len(),
    })
}

/// Pairs conjugate poles (and leftover real poles) into sections and gives
/// each section two zeros, alternating between zeros at +1 and -1 so
/// bandpass sections get the balanced numerator `[1, 0, -1]`.
fn group_sections(poles: &[Complex64], zeros: Vec<f64>, w_ref: f64) -> Vec<Sos> {
    const IMAG_TOL: f64 = 1e-12;
    let mut quadratics: Vec<[f64; 3]> = Vec::new();
    let mut real_poles: Vec<f64> = Vec::new();
    for p in poles {
        if p.im > IMAG_TOL {
            quadratics.push([1.0, -2.0 * p.re, p.norm_sqr()]);
        } else if p.im.abs() <= IMAG_TOL {
            real_poles.push(p.re);
        }
    }
    real_poles.sort_by(|a, b| a.total_cmp(b));
    let mut linear: Option<f64> = None;
    for chunk in real_poles.chunks(2) {
        match chunk {
            [p1, p2] => quadratics.push([1.0, -(p1 + p2), p1 * p2]),
            [p] => linear = Some(*p),
            _ => unreachable!(),
        }
    }

    let (mut pos, mut neg): (Vec<f64>, Vec<f64>) = zeros.into_iter().partition(|z| *z > 0.0);
    let mut next_zero = |prefer_pos: bool| -> Option<f64> {
        if prefer_pos {
            pos.pop().or_else(|| neg.pop())
        } else {
            neg.pop().or_else(|| pos.pop())
        }
    };

    let mut sections = Vec::with_capacity(quadratics.len() + 1);
    if let Some(p) = linear {
        let z = next_zero(false).unwrap_or(0.0);
        sections.push(Sos {
            b: [1.0, -z, 0.0],
            a: [1.0, -p, 0.0],
        });
    }
    for a in quadratics {
        let z1 = next_zero(true);
        let z2 = next_zero(false);
        let b = match (z1, z2) {
            (Some(z1), Some(z2)) => [1.0, -(z1 + z2), z1 * z2],
            (Some(z), None) | (None, Some(z)) => [1.0, -z, 0.0],
            (None, None) => [1.0, 0.0, 0.0],
        };
        sections.push(Sos { b, a });
    }

    let z_ref = Complex64::from_polar(1.0, -w_ref);
    for s in &mut sections {
        let g = s.response(z_ref).norm();
        for c in &mut s.b {
            *c /= g;
        }
    }
    let total = sections
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_ref));
    if total.re < 0.0 {
        for c in &mut sections[0].b {
            *c = -*c;
        }
    }
    sections
}

/// Runs the cascade once over `x` in transposed direct form II, starting
/// from `state` (updated in place).
fn sosfilt(sections: &[Sos], x: &[f64], state: &mut [[f64; 2]]) -> Vec<f64> {
    let mut y = x.to_vec();
    for (s, st) in sections.iter().zip(state.iter_mut()) {
        let [b0, b1, b2] = s.b;
        let [_, a1, a2] = s.a;
        let [mut z1, mut z2] = *st;
        for v in y.iter_mut() {
            let input = *v;
            let out = b0 * input + z1;
            z1 = b1 * input - a1 * out + z2;
            z2 = b2 * input - a2 * out;
            *v = out;
        }
        *st = [z1, z2];
    }
    y
}

/// Per-section initial state for a unit step, cascaded so each section sees
/// the steady-state output of the ones before it.
fn step_states(sections: &[Sos]) -> Vec<[f64; 2]> {
    let mut scale = 1.0;
    sections
        .iter()
        .map(|s| {
            let [z1, z2] = s.step_state();
            let st = [z1 * scale, z2 * scale];
            scale *= (s.b[0] + s.b[1] + s.b[2]) / (s.a[0] + s.a[1] + s.a[2]);
            st
        })
        .collect()
}

/// Zero-phase filtering: forward pass, then a backward pass over the
/// reversed output.
///
/// Both ends are extended by odd reflection of
/// `min(3 * (2 * order + 1), len - 1)` samples, and each pass starts from the
/// step-response steady state scaled by the first sample it sees.
pub fn filtfilt(coeffs: &FilterCoefficients, x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 2 {
        return Err(Error::SignalTooShort { len: n, min: 2 });
    }
    let pad = coeffs.nominal_pad_len().min(n - 1);

    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let zi = step_states(&coeffs.sections);
    let scaled = |v: f64| zi.iter().map(|[a, b]| [a * v, b * v]).collect::<Vec<_>>();

    let mut state = scaled(ext[0]);
    let mut y = sosfilt(&coeffs.sections, &ext, &mut state);
    y.reverse();
    let mut state = scaled(y[0]);
    let mut y = sosfilt(&coeffs.sections, &y, &mut state);
    y.reverse();
    Ok(y[pad..pad + n].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const FS: f64 = 100.0;

    #[test]
    fn lowpass_has_unit_dc_gain() {
        let c = design_butterworth(&FilterSpec::lowpass(6, 10.0), FS).unwrap();
        assert_abs_diff_eq!(c.magnitude(0.0, FS), 1.0, epsilon = 1e-9);
        assert_eq!(c.sections.len(), 3);
        assert!(c.is_stable());
    }

    #[test]
    fn highpass_blocks_dc() {
        let c = design_butterworth(&FilterSpec::highpass(6, 0.5), FS).unwrap();
        assert_abs_diff_eq!(c.magnitude(0.0, FS), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.magnitude(FS / 2.0, FS), 1.0, epsilon = 1e-9);
        assert!(c.is_stable());
    }

    #[test]
    fn bandpass_half_power_at_cutoffs() {
        let c = design_butterworth(&FilterSpec::bandpass(6, 5.0, 15.0), FS).unwrap();
        let half = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(c.magnitude(5.0, FS), half, epsilon = 1e-6);
        assert_abs_diff_eq!(c.magnitude(15.0, FS), half, epsilon = 1e-6);
        assert_eq!(c.order, 12);
        assert!(c.is_stable());
    }

    #[test]
    fn odd_order_gets_first_order_section() {
        let c = design_butterworth(&FilterSpec::lowpass(3, 10.0), FS).unwrap();
        assert_eq!(c.sections.len(), 2);
        assert_eq!(c.sections[0].a[2], 0.0);
        assert_abs_diff_eq!(c.magnitude(0.0, FS), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn wide_bandpass_with_real_poles_is_stable() {
        let fs = 250.0;
        let c = design_butterworth(&FilterSpec::bandpass(6, 0.1, 112.5), fs).unwrap();
        assert!(c.is_stable());
        let half = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(c.magnitude(0.1, fs), half, epsilon = 1e-6);
        assert_abs_diff_eq!(c.magnitude(112.5, fs), half, epsilon = 1e-6);
    }

    #[test]
    fn rejects_bad_cutoffs_and_order() {
        assert!(matches!(
            design_butterworth(&FilterSpec::lowpass(4, 50.0), FS),
            Err(Error::InvalidCutoff(_))
        ));
        assert!(matches!(
            design_butterworth(&FilterSpec::highpass(4, 0.0), FS),
            Err(Error::InvalidCutoff(_))
        ));
        assert!(matches!(
            design_butterworth(&FilterSpec::bandpass(4, 10.0, 5.0), FS),
            Err(Error::InvalidCutoff(_))
        ));
        assert!(matches!(
            design_butterworth(&FilterSpec::lowpass(0, 5.0), FS),
            Err(Error::InvalidOrder(0))
        ));
    }

    #[test]
    fn identity_filter_is_identity() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let y = filtfilt(&FilterCoefficients::identity(), &x).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn highpass_removes_constant() {
        let c = design_butterworth(&FilterSpec::highpass(6, 0.5), FS).unwrap();
        let x = vec![3.5; 1000];
        let y = filtfilt(&c, &x).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-6 * 3.5));
    }

    #[test]
    fn short_signals_shrink_padding() {
        let c = design_butterworth(&FilterSpec::lowpass(2, 10.0), FS).unwrap();
        let y = filtfilt(&c, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y.len(), 3);
        assert!(matches!(
            filtfilt(&c, &[1.0]),
            Err(Error::SignalTooShort { len: 1, .. })
        ));
    }
}
