use std::io;

use thiserror::Error;

/// Coarse failure class, used by front ends to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numeric => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no triples")]
    NoTriples,

    #[error("no classes survive filter")]
    NoClassesSurvive,

    #[error("embedding `{token}`: expected {expected} components, found {found}")]
    DimensionMismatch {
        token: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate embedding token `{0}`")]
    DuplicateToken(String),

    #[error("embedding `{token}`: non-finite value `{value}`")]
    NonFinite { token: String, value: String },

    #[error("embedding file: {0}")]
    EmbeddingFormat(String),

    #[error("missing embedding for {role} token `{token}`{}", class.as_ref().map(|c| format!(" (class `{c}`)")).unwrap_or_default())]
    MissingToken {
        token: String,
        role: TokenRole,
        class: Option<String>,
    },

    #[error("similarity undefined for C < 2 (got {0} classes)")]
    TooFewClasses(usize),

    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("k = {k} exceeds pool: pool size is {pool_size}")]
    KExceedsPool { k: usize, pool_size: usize },

    #[error("isolated class {}: zero degree", class.as_ref().map(|c| format!("`{c}`")).unwrap_or_else(|| format!("#{index}")))]
    IsolatedClass { index: usize, class: Option<String> },

    #[error("eigenvalue {index} failed to converge")]
    NoConvergence { index: usize },

    #[error("csg cutoff k_c = {k_c} out of range 1..={max}")]
    CutoffOutOfRange { k_c: usize, max: usize },

    #[error("gap sum {gap_sum} disagrees with closed form {closed_form}")]
    Telescoping { gap_sum: f64, closed_form: f64 },

    #[error("matrix must be square")]
    NotSquare,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("pearson needs at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("metrics row {row}: unknown dataset `{name}` (known: {})", known.join(", "))]
    UnknownDataset {
        row: usize,
        name: String,
        known: Vec<String>,
    },

    #[error("metrics row {row}: {message}")]
    Metrics { row: usize, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenRole {
    Head,
    Relation,
}

impl std::fmt::Display for TokenRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TokenRole::Head => "head",
            TokenRole::Relation => "relation",
        })
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. }
            | Error::NoTriples
            | Error::DimensionMismatch { .. }
            | Error::DuplicateToken(_)
            | Error::NonFinite { .. }
            | Error::EmbeddingFormat(_)
            | Error::MissingToken { .. }
            | Error::LengthMismatch(..)
            | Error::UnknownDataset { .. }
            | Error::Metrics { .. }
            | Error::TooFewPoints(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => ErrorKind::Data,
            Error::NoClassesSurvive
            | Error::TooFewClasses(_)
            | Error::KExceedsPool { .. }
            | Error::CutoffOutOfRange { .. }
            | Error::NotSquare
            | Error::Config(_) => ErrorKind::Config,
            Error::IsolatedClass { .. } | Error::NoConvergence { .. } | Error::Telescoping { .. } => {
                ErrorKind::Numeric
            }
            Error::Stage { source, .. } | Error::File { source, .. } => source.kind(),
        }
    }

    /// Wraps the error with the pipeline stage it came from.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::File { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
