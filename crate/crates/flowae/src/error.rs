use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] flowae_core::Error),
    #[error("input file not found: {0}")]
    MissingInput(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}: file is empty")]
    EmptyFile(PathBuf),
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("non-numeric value {value:?} at row {row}, column `{column}`")]
    NonNumericValue { row: usize, column: String, value: String },
    #[error("artifact format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt artifact: {0}")]
    CorruptArtifact(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingInput(path)
        } else {
            Error::Io { path, source }
        }
    }
}
