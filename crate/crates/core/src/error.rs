use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants are grouped by how a caller is expected to react: input errors
/// mean the arguments are wrong, certification errors mean a numerical
/// guarantee (tightness, finite normalizer, tail bound) could not be
/// established for an otherwise well-formed model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("probability vector for context {context} sums to {sum}")]
    NotNormalized { context: String, sum: f64 },

    #[error("context {0} is reachable but has no table entry")]
    MissingContext(String),

    #[error("truncation removed every symbol in context {0}")]
    DegenerateAdaptor(String),

    #[error("model may not be tight: {0}")]
    NonTight(String),

    #[error("tail bound cannot be certified: {0}")]
    UncertifiedTail(String),

    #[error("enumeration exceeded {0} entries")]
    EnumerationTooLarge(usize),

    #[error("sample reached the length cap of {0} symbols before EOS")]
    CappedSample(usize),

    #[error("proposal assigns zero probability to {0}")]
    InvalidProposal(String),

    #[error("corpus item {0} lies outside the model support")]
    OutsideSupport(String),

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("hypotheses unmet: {0}")]
    Hypotheses(String),

    #[error("identity check failed: {0}")]
    Identity(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical guarantee rather than of the input.
    pub fn is_certification(&self) -> bool {
        matches!(
            self,
            Error::NonTight(_)
                | Error::UncertifiedTail(_)
                | Error::DegenerateAdaptor(_)
                | Error::CappedSample(_)
                | Error::Identity(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
