use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use psqi_core::{CmaConfig, Error, PsqiConfig, PRNG_ID};
use serde::Serialize;

use crate::{CliError, GlobalOpts, Task};

/// Writes to `path`, or standard output when there is none.
pub fn write_to<F>(path: Option<&Path>, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> psqi_core::Result<()>,
{
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| Error::File {
                path: p.to_owned(),
                source: e,
            })?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush().map_err(Error::Io)?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush().map_err(Error::Io)?;
        }
    }
    Ok(())
}

/// `scores.csv` -> `scores.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// `report.csv` -> `report.<tag>.csv`.
pub fn sibling(out: &Path, tag: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.{tag}.csv"))
}

/// Everything needed to re-derive a result.
#[derive(Debug, Serialize)]
pub struct Metadata<T: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub prng: &'static str,
    pub master_seed: u64,
    pub window_s: f64,
    pub task: &'static str,
    pub external_cmd: Option<String>,
    pub tolerance_s: f64,
    pub config: PsqiConfig,
    pub inputs: Vec<String>,
    pub details: T,
}

impl<T: Serialize> Metadata<T> {
    pub fn new(command: &'static str, g: &GlobalOpts, inputs: &[&Path], details: T) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            prng: PRNG_ID,
            master_seed: g.seed,
            window_s: g.window_s,
            task: match g.task {
                Task::Rpeaks => "rpeaks",
                Task::External => "external",
            },
            external_cmd: g.external_cmd.clone(),
            tolerance_s: psqi_core::metrics::DEFAULT_TOLERANCE_S,
            config: psqi_config(g),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            details,
        }
    }

    /// Written next to `out`; skipped for standard output.
    pub fn write_beside(&self, out: Option<&Path>) -> Result<(), CliError> {
        let Some(out) = out else { return Ok(()) };
        let path = sidecar_path(out);
        let text = serde_json::to_string_pretty(self).map_err(Error::Json)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::File { path, source: e })?;
        Ok(())
    }
}

pub fn psqi_config(g: &GlobalOpts) -> PsqiConfig {
    let mut cfg = PsqiConfig {
        cma: CmaConfig {
            population: g.population,
            max_iterations: g.iterations,
            ..CmaConfig::default()
        },
        master_seed: g.seed,
        ..PsqiConfig::default()
    };
    cfg.snr.gamma_db = g.gamma_db;
    cfg.snr.beta_db = g.beta_db;
    cfg
}
