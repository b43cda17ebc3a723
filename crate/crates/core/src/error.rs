use alloc::string::String;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("no documents")]
    NoDocuments,
    #[error("document {id} is empty after cleaning")]
    EmptyDocument { id: usize },
    #[error("child label {child:?} appears under parents {first:?} and {second:?}")]
    InconsistentChild {
        child: String,
        first: String,
        second: String,
    },
    #[error("duplicate document id {0}")]
    DuplicateId(usize),
    #[error("child label {0:?} has fewer than 2 documents")]
    SingletonClass(String),
    #[error("unknown parent label {0:?}")]
    UnknownParent(String),
    #[error("unknown child label {0:?}")]
    UnknownChild(String),
    #[error("domain {0:?} needs at least 2 child labels with 2 documents each")]
    DegenerateDomain(String),
    #[error("no features retained")]
    NoFeatures,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("sequence shorter than filter ({len} < {width})")]
    SequenceTooShort { len: usize, width: usize },
    #[error("diverged: non-finite loss at step {step}")]
    Diverged { step: usize },
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("class {0} has no training documents")]
    EmptyClass(usize),
    #[error("all test counts are zero")]
    NoTestCounts,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
