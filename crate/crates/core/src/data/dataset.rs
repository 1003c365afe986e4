//! Directory datasets: `<name>.csv` (header `t,value`), `<name>.meta.json`
//! (`{"fs_hz": .., "units": ..}`) and `<name>.ann.json` (`{"peaks": [..]}`
//! or `{"label": 0|1}`, peak indices relative to the record start).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{segment, AnnotatedWindow, Truth, DEFAULT_WINDOW_S};
use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::tasks::{BinaryLabel, PeakList};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub fs_hz: f64,
    #[serde(default)]
    pub units: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum AnnotationFile {
    Peaks { peaks: Vec<usize> },
    Label { label: u8 },
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, e.line(), e.to_string()))
}

fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_error(path, 1, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?;
    if header.len() != 2 || &header[0] != "t" || &header[1] != "value" {
        return Err(parse_error(
            path,
            1,
            format!("expected header `t,value`, got {header:?}"),
        ));
    }
    let mut samples = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_error(path, line, e.to_string()))?;
        if rec.len() != 2 {
            return Err(parse_error(
                path,
                line,
                format!("expected 2 fields, got {}", rec.len()),
            ));
        }
        rec[0]
            .parse::<f64>()
            .map_err(|e| parse_error(path, line, format!("t {:?}: {e}", &rec[0])))?;
        let v = rec[1]
            .parse::<f64>()
            .map_err(|e| parse_error(path, line, format!("value {:?}: {e}", &rec[1])))?;
        if !v.is_finite() {
            return Err(parse_error(path, line, format!("non-finite value {v}")));
        }
        samples.push(v);
    }
    Ok(samples)
}

fn read_truth(path: &Path, n: usize) -> Result<Truth> {
    match read_json::<AnnotationFile>(path)? {
        AnnotationFile::Peaks { peaks } => PeakList::within(peaks, n)
            .map(Truth::Peaks)
            .map_err(|e| parse_error(path, 1, e.to_string())),
        AnnotationFile::Label { label } => BinaryLabel::from_value(label)
            .map(Truth::Label)
            .map_err(|e| parse_error(path, 1, e.to_string())),
    }
}

fn record_names(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::file(dir, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::file(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            names.push((stem.to_owned(), path.clone()));
        }
    }
    names.sort();
    Ok(names)
}

/// Loads every record in `dir` and cuts it into 10 s windows. Annotations
/// are required.
pub fn load_dataset(dir: &Path) -> Result<Vec<AnnotatedWindow>> {
    load_dataset_with(dir, DEFAULT_WINDOW_S, true)
}

/// Like [`load_dataset`]. Without `require_annotations`, records lacking an
/// annotation file get [`Truth::Unknown`].
pub fn load_dataset_with(
    dir: &Path,
    window_s: f64,
    require_annotations: bool,
) -> Result<Vec<AnnotatedWindow>> {
    let mut windows = Vec::new();
    for (name, csv_path) in record_names(dir)? {
        let meta_path = dir.join(format!("{name}.meta.json"));
        if !meta_path.exists() {
            return Err(parse_error(&meta_path, 0, "missing metadata sidecar"));
        }
        let meta: RecordMeta = read_json(&meta_path)?;
        if !(meta.fs_hz.is_finite() && meta.fs_hz > 0.0) {
            return Err(parse_error(
                &meta_path,
                1,
                format!("invalid fs_hz {}", meta.fs_hz),
            ));
        }
        let samples = read_samples(&csv_path)?;
        let n = samples.len();
        let ann_path = dir.join(format!("{name}.ann.json"));
        let truth = if ann_path.exists() {
            read_truth(&ann_path, n)?
        } else if require_annotations {
            return Err(Error::AnnotationMissing(ann_path.display().to_string()));
        } else {
            Truth::Unknown
        };
        if (n as f64) < window_s * meta.fs_hz {
            log::warn!(
                "{}: {:.3} s is shorter than one {window_s} s window; skipped",
                csv_path.display(),
                n as f64 / meta.fs_hz
            );
            continue;
        }
        let signal = Signal::new(samples, meta.fs_hz)
            .map_err(|e| parse_error(&csv_path, 0, e.to_string()))?;
        windows.extend(segment(&signal, window_s, &truth, &name)?);
    }
    Ok(windows)
}

fn check_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '#'));
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name:?} is not a usable record name"
        )))
    }
}

/// Writes one record per window, named by its window id.
pub fn write_dataset(dir: &Path, windows: &[AnnotatedWindow], units: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    for w in windows {
        check_name(&w.window_id)?;
        let csv_path = dir.join(format!("{}.csv", w.window_id));
        let file = fs::File::create(&csv_path).map_err(|e| Error::file(&csv_path, e))?;
        let mut out = BufWriter::new(file);
        let fs_hz = w.signal.fs();
        let write = |out: &mut BufWriter<fs::File>| -> std::io::Result<()> {
            writeln!(out, "t,value")?;
            for (i, v) in w.signal.samples().iter().enumerate() {
                writeln!(out, "{},{v}", i as f64 / fs_hz)?;
            }
            out.flush()
        };
        write(&mut out).map_err(|e| Error::file(&csv_path, e))?;

        let meta = RecordMeta {
            fs_hz,
            units: units.to_owned(),
        };
        write_json(&dir.join(format!("{}.meta.json", w.window_id)), &meta)?;
        let ann = match &w.truth {
            Truth::Peaks(p) => Some(AnnotationFile::Peaks {
                peaks: p.indices().to_vec(),
            }),
            Truth::Label(l) => Some(AnnotationFile::Label { label: l.value() }),
            Truth::Unknown => None,
        };
        if let Some(ann) = ann {
            write_json(&dir.join(format!("{}.ann.json", w.window_id)), &ann)?;
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::file(path, e))
}
