use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use xenodiv::model::{TokenString, TrajectoryModel};
use xenodiv::structures::System;
use xenodiv::xeno::{ConstraintSystems, ScoreConfig};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IDENTITY: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Missing, unreadable or unparsable inputs and invalid settings.
    Config(String),
    /// Well-formed inputs rejected by the library.
    Validation(String),
    /// `verify` found a failing identity; the report was still written.
    Identity(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Identity(_) => EXIT_IDENTITY,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Identity(m) => write!(f, "identity check failed: {m}"),
        }
    }
}

impl From<xenodiv::Error> for CliError {
    fn from(e: xenodiv::Error) -> Self {
        if e.is_input_error() || matches!(e, xenodiv::Error::InvalidConfig(_)) {
            CliError::Config(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn context(path: &Path) -> impl Fn(xenodiv::Error) -> CliError + '_ {
    move |e| match CliError::from(e) {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => other,
    }
}

pub fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    path.as_deref().ok_or_else(|| CliError::Config(format!("{flag} is required for this command")))
}

pub fn load_model(path: &Path) -> CliResult<TrajectoryModel> {
    TrajectoryModel::load(path).map_err(context(path))
}

pub fn load_system(path: &Path, model: &TrajectoryModel) -> CliResult<System> {
    System::load(path, model.alphabet_arc()).map_err(context(path))
}

pub fn load_config(path: Option<&Path>) -> CliResult<ScoreConfig> {
    match path {
        Some(p) => ScoreConfig::load(p).map_err(context(p)),
        None => Ok(ScoreConfig::default()),
    }
}

pub fn load_constraints(path: Option<&Path>, model: &TrajectoryModel) -> CliResult<ConstraintSystems> {
    match path {
        Some(p) => ConstraintSystems::load(p, model.alphabet_arc()).map_err(context(p)),
        None => Ok(ConstraintSystems::default()),
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn parse_string(model: &TrajectoryModel, text: &str) -> CliResult<TokenString> {
    model.parse(text).map_err(CliError::from)
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Validation(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn csv_bytes<F>(header: &[String], fill: F) -> CliResult<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).map_err(|e| CliError::Validation(e.to_string()))?;
        fill(&mut w).map_err(|e| CliError::Validation(e.to_string()))?;
        w.flush().map_err(|e| CliError::Validation(e.to_string()))?;
    }
    Ok(buf)
}

/// Writes to `out` through a sibling temporary file and a rename, or to
/// stdout when no path is given.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    let io_err = |e: std::io::Error| CliError::Config(format!("cannot write output: {e}"));
    match out {
        None => std::io::stdout().lock().write_all(bytes).map_err(io_err),
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
            tmp.write_all(bytes).map_err(io_err)?;
            tmp.as_file().sync_all().map_err(io_err)?;
            tmp.persist(path).map_err(|e| io_err(e.error))?;
            Ok(())
        }
    }
}
