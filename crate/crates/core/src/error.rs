use thiserror::Error;

pub type Result<T> = std::result::Result<T, CatError>;

#[derive(Debug, Error)]
pub enum CatError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid concept spec at {location}: {detail}")]
    Spec { location: String, detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("data error{}: {detail}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Data { row: Option<usize>, detail: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: {detail}")]
    Divergence {
        epoch: usize,
        batch: usize,
        detail: String,
    },

    #[error("oracle size guard: {0}")]
    SizeGuard(String),

    #[error("monomial expansion unsupported: {0}")]
    ExpansionUnsupported(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid archive: {0}")]
    Archive(String),

    #[error("oracle check failed: {0}")]
    OracleFailure(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CatError {
    /// Stable machine-readable class printed on the first line of CLI errors.
    pub fn class(&self) -> &'static str {
        match self {
            CatError::Shape(_) => "SHAPE_ERROR",
            CatError::Spec { .. } => "SPEC_INVALID",
            CatError::Config(_) => "CONFIG_INVALID",
            CatError::Data { .. } => "DATA_INVALID",
            CatError::SchemaMismatch(_) => "SCHEMA_MISMATCH",
            CatError::NonFinite(_) => "NON_FINITE",
            CatError::Divergence { .. } => "DIVERGED",
            CatError::SizeGuard(_) => "SIZE_GUARD",
            CatError::ExpansionUnsupported(_) => "EXPANSION_UNSUPPORTED",
            CatError::Degenerate(_) => "DEGENERATE",
            CatError::Archive(_) => "ARCHIVE_INVALID",
            CatError::OracleFailure(_) => "ORACLE_FAILURE",
            CatError::Io { .. } => "IO_ERROR",
            CatError::Json(_) => "JSON_INVALID",
        }
    }

    /// Process exit code: 2 for user/input problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CatError::NonFinite(_)
            | CatError::Divergence { .. }
            | CatError::OracleFailure(_)
            | CatError::Degenerate(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CatError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
