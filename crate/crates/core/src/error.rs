use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(err: toml::de::Error) -> Self {
        // toml renders a multi-line snippet; keep it on one line for diagnostics.
        let msg = err.to_string();
        let mut flat: Vec<&str> = msg
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        flat.dedup();
        ConfigError::Parse(flat.join(" "))
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace is empty (count must be positive)")]
    Empty,
    #[error("invalid zipf parameter: {0}")]
    Zipf(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: index {index} out of range for {rows} rows")]
    OutOfRange { line: usize, index: u64, rows: u64 },
    #[error("malformed binary trace: {0}")]
    Binary(String),
    #[error("trace too short: {required} indices required, {available} available")]
    Length { required: u64, available: u64 },
    #[error("trace has {trace} rows but the embedding layer has {layer}")]
    RowsMismatch { trace: u64, layer: u64 },
    #[error("address overflow: embedding tables exceed the 64-bit address space")]
    AddressOverflow,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0} is not supported by the reference cache model")]
    Unsupported(crate::config::PolicyKind),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Trace {
        context: String,
        #[source]
        source: TraceError,
    },
    #[error("{context}: {source}")]
    Policy {
        context: String,
        #[source]
        source: PolicyError,
    },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}
