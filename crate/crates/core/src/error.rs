use std::path::PathBuf;

/// Errors raised anywhere in the attribution pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("path not found: {0}")]
    NotFound(PathBuf),
    #[error("corpus at {0} contains no author directories")]
    EmptyCorpus(PathBuf),
    #[error("author `{0}` has no readable text files")]
    EmptyAuthor(String),
    #[error("document {0} is empty")]
    EmptyDocument(String),
    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),
    #[error("file {0} is not valid UTF-8")]
    EncodingError(PathBuf),
    #[error("author `{0}` has too few documents")]
    InsufficientDocuments(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("incompatible model: {0}")]
    IncompatibleModel(String),
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("sketch capacity must be at least 1")]
    InvalidCapacity,
    #[error("feature vocabulary is empty")]
    EmptyVocabulary,
    #[error("layout mismatch: expected {expected} dims, got {got}")]
    LayoutMismatch { expected: usize, got: usize },
    #[error("at least two vectors are needed to fit a scaler")]
    InsufficientData,
    #[error("rank {rank} out of range for k = {k}")]
    OutOfRange { rank: usize, k: usize },
    #[error("fingerprint would be empty (no word tokens)")]
    EmptyFingerprint,
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("at least two authors are required")]
    NeedsTwoClasses,
    #[error("both validation accuracies are zero")]
    DegenerateValidation,
    #[error("predictions cover different author sets")]
    IncompatiblePredictions,
    #[error("author `{0}` does not appear in the training data")]
    UnknownAuthor(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Variant name, used as the machine-readable error tag on the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotFound(_) => "NotFound",
            Error::EmptyCorpus(_) => "EmptyCorpus",
            Error::EmptyAuthor(_) => "EmptyAuthor",
            Error::EmptyDocument(_) => "EmptyDocument",
            Error::DuplicateDocument(_) => "DuplicateDocument",
            Error::EncodingError(_) => "EncodingError",
            Error::InsufficientDocuments(_) => "InsufficientDocuments",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::IncompatibleModel(_) => "IncompatibleModel",
            Error::ParseError(_) => "ParseError",
            Error::InvalidCapacity => "InvalidCapacity",
            Error::EmptyVocabulary => "EmptyVocabulary",
            Error::LayoutMismatch { .. } => "LayoutMismatch",
            Error::InsufficientData => "InsufficientData",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::EmptyFingerprint => "EmptyFingerprint",
            Error::DegenerateLabels => "DegenerateLabels",
            Error::InvalidInput(_) => "InvalidInput",
            Error::NeedsTwoClasses => "NeedsTwoClasses",
            Error::DegenerateValidation => "DegenerateValidation",
            Error::IncompatiblePredictions => "IncompatiblePredictions",
            Error::UnknownAuthor(_) => "UnknownAuthor",
            Error::Io { .. } => "Io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
