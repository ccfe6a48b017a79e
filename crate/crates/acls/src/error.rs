use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("invalid config field `{key}`: {reason}")]
    Field { key: &'static str, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] acls_core::Error),
    #[error("slope window [{lo}, {hi}] holds {found} points, need at least {needed}")]
    SparseWindow { lo: f64, hi: f64, found: usize, needed: usize },
    #[error("nonpositive risk {risk} at t = {t}")]
    NonPositiveRisk { t: f64, risk: f64 },
    #[error("ACLS_SEED must be an unsigned integer, got `{0}`")]
    SeedVar(String),
}

impl Error {
    pub(crate) fn field(key: &'static str, reason: impl Into<String>) -> Self {
        Error::Field { key, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
