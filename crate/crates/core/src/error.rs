use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure modes of the engine:
/// expression parsing, registry bookkeeping, representation transforms,
/// formula evaluation, and session persistence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unbound symbol \"{0}\" in numeric evaluation")]
    UnboundSymbol(String),

    #[error("domain error in numeric evaluation: {0}")]
    Domain(String),

    #[error("no admissible sample point found after {0} retries")]
    UnresolvableSample(usize),

    #[error("the tensor \"{0}\" does not exist")]
    UnknownId(String),

    #[error("a tensor with ID \"{0}\" already exists; enable overwriting or delete it first")]
    DuplicateId(String),

    #[error("\"{0}\" is not a coordinate system")]
    UnknownCoords(String),

    #[error("\"{0}\" is not a metric")]
    UnknownMetric(String),

    #[error("a coordinate system needs at least one symbol")]
    EmptySymbols,

    #[error("coordinate symbols must be distinct")]
    DuplicateSymbols,

    #[error("metric components must be symmetric")]
    NotSymmetric,

    #[error("matrix is singular")]
    Singular,

    #[error("component array has wrong extent: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error(
        "the coordinate system \"{coords}\" cannot be deleted, as it is the default coordinate system of the tensor \"{user}\""
    )]
    InUseAsCoords { coords: String, user: String },

    #[error(
        "the metric \"{metric}\" cannot be deleted, as it has been used to define the tensor \"{user}\""
    )]
    InUseAsMetric { metric: String, user: String },

    #[error("index configuration has rank {got}, but the tensor has rank {expected}")]
    RankMismatch { expected: usize, got: usize },

    #[error("operation not allowed for a tensor with role {0}")]
    RoleForbidden(String),

    #[error("coordinate systems \"{0}\" and \"{1}\" have different dimensions")]
    DimensionMismatch(String, String),

    #[error("transformation rule targets \"{0}\", which is not a symbol of the source system")]
    RuleTargetsNonSourceSymbol(String),

    #[error("no transformation path from the cached representations of \"{id}\" to \"{coords}\"")]
    NoTransformPath { id: String, coords: String },

    #[error("free indices do not match across the terms of the formula: {0}")]
    FreeIndexMismatch(String),

    #[error("cannot combine tensors associated with different metrics (\"{0}\" vs \"{1}\")")]
    MixedMetrics(String, String),

    #[error("coordinate systems cannot be added to other tensors")]
    CoordinateAddition,

    #[error("index letter '{0}' appears more than twice in a term")]
    TripleIndex(char),

    #[error("derivative operand must be followed by a tensor operand")]
    DanglingDerivative,

    #[error("no metric is associated with the formula; define one for the working coordinates")]
    NoMetric,

    #[error("the symbol \"{0}\" is reserved")]
    ReservedSymbol(String),

    #[error("the curve parameter \"{0}\" collides with a coordinate symbol")]
    CollidesWithCoordinate(String),

    #[error("session schema error: {0}")]
    Schema(String),

    #[error("unsupported session format version \"{0}\"")]
    VersionUnsupported(String),

    #[error("tensor \"{id}\" references \"{target}\", which is not present")]
    DanglingReference { id: String, target: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
