//! Process adapter for external binary classifiers.
//!
//! Wire protocol: the child reads `fs=<float>` on the first line of standard
//! input, then one sample per line, then end of stream. It must print exactly
//! `0` or `1` followed by a newline on standard output and exit with status 0.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

use super::BinaryLabel;

pub const DEFAULT_TIMEOUT_S: f64 = 30.0;
/// Overrides the timeout of every call, in seconds.
pub const TIMEOUT_ENV: &str = "PSQI_TIMEOUT_S";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalCommandSpec {
    pub program: String,
    pub args: Vec<String>,
    pub timeout_s: f64,
}

impl ExternalCommandSpec {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
            timeout_s: DEFAULT_TIMEOUT_S,
        }
    }

    /// Splits a command line on whitespace (no shell quoting).
    pub fn parse(command_line: &str) -> Result<Self> {
        let mut parts = command_line.split_whitespace().map(str::to_owned);
        let program = parts
            .next()
            .ok_or_else(|| Error::Config("empty external command".into()))?;
        Ok(Self::new(program, parts.collect()))
    }

    pub fn with_timeout(mut self, timeout_s: f64) -> Self {
        self.timeout_s = timeout_s;
        self
    }

    fn effective_timeout(&self) -> Duration {
        let secs = std::env::var(TIMEOUT_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite() && *v > 0.0)
            .unwrap_or(self.timeout_s);
        Duration::from_secs_f64(secs.max(0.0))
    }
}

pub(crate) fn serialize_window(x: &Signal) -> String {
    let mut out = String::with_capacity(x.len() * 12 + 16);
    out.push_str(&format!("fs={}\n", x.fs()));
    for v in x.samples() {
        out.push_str(&format!("{v}\n"));
    }
    out
}

fn failure(message: impl Into<String>, stderr: &[u8]) -> Error {
    Error::ClassifierFailure {
        message: message.into(),
        stderr: String::from_utf8_lossy(stderr).into_owned(),
    }
}

/// Runs the external classifier on one window.
pub fn external_classifier(spec: &ExternalCommandSpec, x: &Signal) -> Result<BinaryLabel> {
    let mut child = Command::new(&spec.program)
        .args(&spec.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| failure(format!("cannot start {}: {e}", spec.program), b""))?;

    let payload = serialize_window(x);
    let mut stdin = child.stdin.take().expect("piped stdin");
    // A child that exits without reading closes the pipe; that is its business.
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(payload.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let out_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout.read_to_end(&mut buf);
        buf
    });
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });

    let timeout = spec.effective_timeout();
    let start = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break Some(status);
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            break None;
        }
        thread::sleep(Duration::from_millis(2));
    };
    let Some(status) = status else {
        // Grandchildren may still hold the pipes open; leave the I/O threads
        // detached rather than wait on them.
        return Err(failure(
            format!(
                "{} timed out after {:.3} s",
                spec.program,
                timeout.as_secs_f64()
            ),
            b"",
        ));
    };
    let _ = writer.join();
    let out = out_reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    if !status.success() {
        return Err(failure(
            format!("{} exited with {status}", spec.program),
            &err,
        ));
    }
    let text = String::from_utf8_lossy(&out);
    let line = text
        .strip_suffix('\n')
        .map(|s| s.strip_suffix('\r').unwrap_or(s));
    match line {
        Some("0") => Ok(BinaryLabel::Negative),
        Some("1") => Ok(BinaryLabel::Positive),
        _ => Err(failure(
            format!("expected `0` or `1` and a newline, got {:?}", text),
            &err,
        )),
    }
}
