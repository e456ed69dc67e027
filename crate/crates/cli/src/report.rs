//! Output artifacts: JSON reports, CSV tables and the error envelope.

use std::fs;
use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;

/// Bumped whenever a report or CSV layout changes shape.
pub const SCHEMA_VERSION: u32 = 1;

/// Wall-clock facts kept apart from the reproducible payload.
#[derive(Debug, Serialize)]
pub struct Metadata {
    pub created_unix_s: u64,
    pub duration_ms: f64,
}

impl Metadata {
    pub fn now(duration: Duration) -> Self {
        Self {
            created_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            duration_ms: duration.as_secs_f64() * 1e3,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub schema_version: u32,
    pub command: &'static str,
    pub library_version: &'static str,
    #[serde(flatten)]
    pub body: T,
    pub metadata: Metadata,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &'static str, body: T, duration: Duration) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            library_version: qcgm::VERSION,
            body,
            metadata: Metadata::now(duration),
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub exit_code: u8,
}

impl CliError {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        Self {
            kind: kind.to_string(),
            message: message.into(),
            exit_code: 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "kind": self.kind, "error": self.message }).to_string()
    }
}

impl From<qcgm::Error> for CliError {
    fn from(e: qcgm::Error) -> Self {
        let hint = match &e {
            qcgm::Error::OracleLimit { .. } => " (brute force is exponential; use a smaller model)",
            qcgm::Error::SimulatorLimit { .. } => " (the statevector needs 2^m amplitudes; use fewer vertices or cliques)",
            _ => "",
        };
        Self::new(e.kind(), format!("{e}{hint}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new("io", e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new("csv", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new("serde", e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::new("io", format!("creating {}: {e}", dir.display())))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::new("io", format!("writing {}: {e}", path.display())))
}

pub fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `x` column of bitstrings, vertex 0 first.
pub fn write_samples(path: &Path, samples: &[usize], n: usize) -> CliResult<()> {
    #[derive(Serialize)]
    struct Row {
        x: String,
    }
    write_csv(
        path,
        samples.iter().map(|&s| Row {
            x: qcgm::model::format_bits(s, n),
        }),
    )
}

pub fn read_samples(path: &Path) -> CliResult<(usize, Vec<usize>)> {
    let mut r = csv::Reader::from_path(path)?;
    let mut n = None;
    let mut samples = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bits = rec.get(0).unwrap_or("").trim();
        match n {
            None => n = Some(bits.len()),
            Some(n) if n != bits.len() => {
                return Err(CliError::new(
                    "length_mismatch",
                    format!("{}: row {} has {} bits, expected {n}", path.display(), line + 2, bits.len()),
                ))
            }
            _ => {}
        }
        samples.push(qcgm::model::parse_bits(bits)?);
    }
    let n = n.ok_or_else(|| CliError::new("empty", format!("{} holds no samples", path.display())))?;
    Ok((n, samples))
}
