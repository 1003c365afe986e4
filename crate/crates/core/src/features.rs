//! Feature-based SQI inputs. Features are extracted and exported as a table;
//! fitting a model on them happens outside this crate.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::match_peaks;
use crate::signal::Signal;
use crate::spectral::welch;
use crate::tasks::{detect_rpeaks_alternate, detect_rpeaks_reference, PeakList};

pub const FEATURE_HEADER: [&str; 11] = [
    "id",
    "kurtosis",
    "skewness",
    "power_ratio_5_20",
    "spectral_purity",
    "median_hr_bpm",
    "min_rr_s",
    "max_rr_s",
    "template_corr",
    "detector_agreement",
    "metric",
];

const MIN_DURATION_S: f64 = 5.0;
const WELCH_SEGMENT_S: f64 = 2.0;
const SPECTRUM_LOW_HZ: f64 = 0.5;
const BEAT_HALF_WINDOW_S: f64 = 0.300;
const AGREEMENT_TOLERANCE_S: f64 = 0.100;
const MIN_BEATS: usize = 3;

/// `None` marks a feature that is undefined for the window (too few beats,
/// or zero variance).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Pearson (non-excess) kurtosis; 3 for Gaussian data.
    pub kurtosis: Option<f64>,
    pub skewness: Option<f64>,
    pub power_ratio_5_20: Option<f64>,
    pub spectral_purity: Option<f64>,
    pub median_hr_bpm: Option<f64>,
    pub min_rr_s: Option<f64>,
    pub max_rr_s: Option<f64>,
    pub template_corr: Option<f64>,
    pub detector_agreement: Option<f64>,
}

impl FeatureVector {
    pub fn values(&self) -> [Option<f64>; 9] {
        [
            self.kurtosis,
            self.skewness,
            self.power_ratio_5_20,
            self.spectral_purity,
            self.median_hr_bpm,
            self.min_rr_s,
            self.max_rr_s,
            self.template_corr,
            self.detector_agreement,
        ]
    }

    fn from_values(v: [Option<f64>; 9]) -> Self {
        Self {
            kurtosis: v[0],
            skewness: v[1],
            power_ratio_5_20: v[2],
            spectral_purity: v[3],
            median_hr_bpm: v[4],
            min_rr_s: v[5],
            max_rr_s: v[6],
            template_corr: v[7],
            detector_agreement: v[8],
        }
    }
}

/// Standardized third and fourth central moments.
fn moments(x: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    if m2 <= 0.0 {
        return (None, None);
    }
    (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2)))
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn template_correlation(x: &[f64], beats: &PeakList, half: usize) -> Option<f64> {
    let windows: Vec<&[f64]> = beats
        .indices()
        .iter()
        .filter(|&&b| b >= half && b + half < x.len())
        .map(|&b| &x[b - half..=b + half])
        .collect();
    if windows.len() < 2 {
        return None;
    }
    let width = 2 * half + 1;
    let template: Vec<f64> = (0..width)
        .map(|i| windows.iter().map(|w| w[i]).sum::<f64>() / windows.len() as f64)
        .collect();
    let corrs: Vec<f64> = windows
        .iter()
        .filter_map(|w| pearson(w, &template))
        .collect();
    (!corrs.is_empty()).then(|| corrs.iter().sum::<f64>() / corrs.len() as f64)
}

pub fn extract_features(x: &Signal) -> Result<FeatureVector> {
    if x.duration_s() < MIN_DURATION_S {
        return Err(Error::UnsupportedSignal(format!(
            "feature extraction needs at least {MIN_DURATION_S} s, got {:.3} s",
            x.duration_s()
        )));
    }
    let fs = x.fs();
    let samples = x.samples();
    let (skewness, kurtosis) = moments(samples);

    let psd = welch(samples, fs, WELCH_SEGMENT_S);
    let nyquist = fs / 2.0;
    let total = psd.band_sum(SPECTRUM_LOW_HZ, nyquist);
    let power_ratio_5_20 = (total > 0.0).then(|| psd.band_sum(5.0, 20.0) / total);
    let m0 = psd.moment(0, SPECTRUM_LOW_HZ, nyquist);
    let m2 = psd.moment(2, SPECTRUM_LOW_HZ, nyquist);
    let m4 = psd.moment(4, SPECTRUM_LOW_HZ, nyquist);
    let spectral_purity = (m0 > 0.0 && m4 > 0.0).then(|| m2 * m2 / (m0 * m4));

    let mut features = FeatureVector {
        kurtosis,
        skewness,
        power_ratio_5_20,
        spectral_purity,
        ..Default::default()
    };

    let beats = detect_rpeaks_reference(x)?;
    if beats.len() < MIN_BEATS {
        return Ok(features);
    }
    let mut rr: Vec<f64> = beats
        .indices()
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64 / fs)
        .collect();
    features.min_rr_s = rr.iter().copied().reduce(f64::min);
    features.max_rr_s = rr.iter().copied().reduce(f64::max);
    features.median_hr_bpm = Some(60.0 / median(&mut rr));

    let half = (BEAT_HALF_WINDOW_S * fs).round() as usize;
    features.template_corr = template_correlation(samples, &beats, half);

    let alternate = detect_rpeaks_alternate(x)?;
    let matched = match_peaks(&beats, &alternate, AGREEMENT_TOLERANCE_S, fs);
    features.detector_agreement = Some(matched.tp as f64 / beats.len() as f64);
    Ok(features)
}

/// One exported row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub features: FeatureVector,
    pub metric: Option<f64>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the feature table: fixed header, one row per window, missing
/// values as empty cells.
pub fn write_features<W: Write>(out: W, rows: &[FeatureRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FEATURE_HEADER)?;
    for row in rows {
        let mut record = Vec::with_capacity(FEATURE_HEADER.len());
        record.push(row.id.clone());
        record.extend(row.features.values().into_iter().map(cell));
        record.push(cell(row.metric));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_features(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
    write_features(std::io::BufWriter::new(file), rows)
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != FEATURE_HEADER {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|e| Error::Parse {
                path: path.to_owned(),
                line: i + 2,
                message: format!("{s:?}: {e}"),
            })
        };
        let mut values = [None; 9];
        for (k, v) in values.iter_mut().enumerate() {
            *v = parse(&rec[k + 1])?;
        }
        rows.push(FeatureRow {
            id: rec[0].to_owned(),
            features: FeatureVector::from_values(values),
            metric: parse(&rec[10])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::GaussianStream;

    #[test]
    fn gaussian_moments() {
        let x = GaussianStream::new(5).normals(100_000);
        let (s, k) = moments(&x);
        assert!((k.unwrap() - 3.0).abs() < 0.1);
        assert!(s.unwrap().abs() < 0.05);
    }

    #[test]
    fn flat_signal_moments_are_missing() {
        assert_eq!(moments(&[1.0; 10]), (None, None));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn sinusoid_spectrum_features() {
        let fs = 250.0;
        let x: Vec<f64> = (0..2500)
            .map(|i| (std::f64::consts::TAU * 10.0 * i as f64 / fs).sin())
            .collect();
        let f = extract_features(&Signal::new(x, fs).unwrap()).unwrap();
        assert!(f.power_ratio_5_20.unwrap() >= 0.99);
        assert!(f.spectral_purity.unwrap() >= 0.99);
    }

    #[test]
    fn short_windows_are_rejected() {
        let x = Signal::new(vec![0.0; 1000], 250.0).unwrap();
        assert!(extract_features(&x).is_err());
    }

    #[test]
    fn header_only_for_empty_dataset() {
        let mut buf = Vec::new();
        write_features(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{}\n", FEATURE_HEADER.join(","))
        );
    }
}
