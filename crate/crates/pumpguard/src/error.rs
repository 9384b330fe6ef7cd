use std::path::PathBuf;

use pumpguard_core::detector::DetectError;
use pumpguard_core::dsp::DspError;
use pumpguard_core::process::SimError;
use pumpguard_core::profiling::ProfileError;
use pumpguard_core::synth::SynthError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed document: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("invalid config `{key}`: {constraint}")]
    Config { key: String, constraint: String },
    #[error("{path}: profile database version {found} is not supported (expected {expected})")]
    DbVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: unsupported WAV format: {detail} (need PCM 16-bit mono)")]
    UnsupportedWav { path: PathBuf, detail: String },
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Detect(#[from] DetectError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Malformed {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            constraint: constraint.into(),
        }
    }
}
