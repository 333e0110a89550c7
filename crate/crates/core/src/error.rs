use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown target key `{0}`")]
    UnknownTarget(String),

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{0}: file is empty")]
    EmptyFile(PathBuf),

    #[error("{path}: duplicate food code `{code}`")]
    DuplicateCode { path: PathBuf, code: String },

    #[error("no food codes in common between the joined tables")]
    JoinEmpty,

    #[error("energy {0} kcal/100 g is below the 1 kcal floor")]
    NearZeroEnergy(f64),

    #[error("modifier `{0}` is already present in the description")]
    ModifierAlreadyPresent(String),

    #[error("unknown modifier `{0}`")]
    UnknownModifier(String),

    #[error("{path}: line {line}: {msg}")]
    BadEmbeddingFile { path: PathBuf, line: usize, msg: String },

    #[error("text not present in embedding file: {0:?}")]
    UnknownText(String),

    #[error("cannot fit a TF-IDF model on an empty corpus")]
    EmptyCorpus,

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("activation cache was produced by a different parameter version")]
    StaleCache,

    #[error("targets are constant; R² is undefined")]
    ConstantTargets,

    #[error("input is constant; correlation is undefined")]
    ConstantInput,

    #[error("no model for required target `{0}`")]
    MissingModel(String),

    #[error("profile lacks required target `{0}`")]
    MissingTarget(String),

    #[error("profile basis must be per_100kcal for scoring")]
    WrongBasis,

    #[error("featurizer fingerprint mismatch for `{target}`")]
    FingerprintMismatch { target: String },

    #[error("{path}: format version {found}, expected {expected}")]
    VersionMismatch { path: PathBuf, found: u32, expected: u32 },

    #[error("{path}: corrupt model file: {msg}")]
    CorruptFile { path: PathBuf, msg: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        Error::Parse { path: path.into(), msg: msg.to_string() }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 2 covers bad input or configuration, 3 a missing artifact, 4 an
    /// internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingModel(_) | Error::FingerprintMismatch { .. } => 3,
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
            Error::Invariant(_) | Error::StaleCache | Error::ShapeMismatch(_) => 4,
            _ => 2,
        }
    }
}
