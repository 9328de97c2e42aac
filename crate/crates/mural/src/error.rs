use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, MuralError>;

#[derive(Debug, thiserror::Error)]
pub enum MuralError {
    #[error(transparent)]
    Core(#[from] mural_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("io error: {0}")]
    Stream(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}, column `{column}`: cannot parse `{text}` as {expected}")]
    Cell { row: usize, column: String, text: String, expected: String },
    #[error("header mismatch: {0}")]
    Header(String),
    #[error("row {row} has {got} fields, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("schema line {line}: {message}")]
    SchemaFile { line: usize, message: String },
    #[error("forest file: {0}")]
    ForestFile(String),
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checksum mismatch: file is corrupt")]
    Checksum,
    #[error("matrix file: {0}")]
    MatrixFile(String),
    #[error("cohort expression `{expr}`: {message}")]
    Expr { expr: String, message: String },
    #[error("cohorts overlap in {0} rows (pass --allow-overlap to permit)")]
    Overlap(usize),
    #[error("config: {0}")]
    Config(String),
    #[error("inconsistent generator spec: {0}")]
    Spec(String),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("truth graph is disconnected even with {0} neighbours")]
    Disconnected(usize),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl MuralError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MuralError::Io { path: path.into(), source }
    }

    /// Process exit code: 2 for broken internal invariants, 1 for anything
    /// caused by inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            MuralError::Internal(_) => 2,
            _ => 1,
        }
    }
}
