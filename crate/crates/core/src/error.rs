use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate note_id {0:?}")]
    DuplicateNoteId(String),

    #[error("{0}: corpus is empty")]
    EmptyCorpus(PathBuf),

    #[error("invalid note: {0}")]
    InvalidNote(String),

    #[error("split: class {label} has {count} note(s), stratification needs at least 2")]
    ClassTooSmall { label: String, count: usize },

    #[error("lexicon list {0} is missing")]
    MissingListFile(PathBuf),

    #[error("{path}:{line}: invalid phrase {phrase:?}: {reason}")]
    InvalidPhrase {
        path: PathBuf,
        line: usize,
        phrase: String,
        reason: String,
    },

    #[error("antibiotic terms overlap trigger lists: {}", .0.join(", "))]
    LexiconOverlap(Vec<String>),

    #[error("candidate {0:?} is still PENDING")]
    PendingCandidate(String),

    #[error("candidate {candidate:?} already decided as {decision}")]
    DecisionAlreadyMade { candidate: String, decision: String },

    #[error("token {0:?} is not in the embedding vocabulary")]
    OutOfVocabulary(String),

    #[error("no token reaches min_count {0}; embedding vocabulary is empty")]
    EmptyVocabulary(u64),

    #[error("all tokens pruned (min_df {min_df}, max_df_ratio {max_df_ratio})")]
    AllTokensPruned { min_df: u32, max_df_ratio: f64 },

    #[error("training data has a single class ({0}); both POSITIVE and NEGATIVE are required")]
    SingleClass(String),

    #[error("feature {index} of example {row} is not finite")]
    NonFiniteFeature { row: usize, index: u32 },

    #[error("feature index {index} out of range for vocabulary of size {size}")]
    IndexOutOfRange { index: u32, size: usize },

    #[error("unsupported model format version {found} (supported: {supported})")]
    ModelVersion { found: String, supported: u32 },

    #[error("model checksum mismatch (file truncated or corrupt)")]
    ModelChecksum,

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("evaluation set is empty after excluding {excluded} note(s)")]
    EmptyTestSet { excluded: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable snake_case name of the variant, for machine-readable output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MalformedRecord { .. } => "malformed_record",
            Error::DuplicateNoteId(_) => "duplicate_note_id",
            Error::EmptyCorpus(_) => "empty_corpus",
            Error::InvalidNote(_) => "invalid_note",
            Error::ClassTooSmall { .. } => "class_too_small",
            Error::MissingListFile(_) => "missing_list_file",
            Error::InvalidPhrase { .. } => "invalid_phrase",
            Error::LexiconOverlap(_) => "lexicon_overlap",
            Error::PendingCandidate(_) => "pending_candidate",
            Error::DecisionAlreadyMade { .. } => "decision_already_made",
            Error::OutOfVocabulary(_) => "out_of_vocabulary",
            Error::EmptyVocabulary(_) => "empty_vocabulary",
            Error::AllTokensPruned { .. } => "all_tokens_pruned",
            Error::SingleClass(_) => "single_class",
            Error::NonFiniteFeature { .. } => "non_finite_feature",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::ModelVersion { .. } => "model_version",
            Error::ModelChecksum => "model_checksum",
            Error::ModelFormat(_) => "model_format",
            Error::EmptyTestSet { .. } => "empty_test_set",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
