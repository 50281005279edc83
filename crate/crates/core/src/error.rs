use thiserror::Error;

/// Errors raised across the resonance and exceptional-point pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("shifted pencil is numerically singular at sigma = {re:e}{im:+e}i")]
    SingularShift { re: f64, im: f64 },

    #[error("pair tracking is ambiguous (best {best:.4}, runner-up {runner_up:.4})")]
    AmbiguousTracking { best: f64, runner_up: f64 },

    #[error("stencil reaches non-positive magnetic field (gamma0 - h_gamma = {0:e})")]
    NegativeField(f64),

    #[error("degenerate elimination: {0}")]
    DegenerateElimination(String),

    #[error("root tracking jumped at epsilon = {0}")]
    TrackingJump(f64),

    #[error("epsilon continuation failed: {0}")]
    ContinuationFailed(String),

    #[error("iteration cap of {0} reached")]
    IterationCapReached(usize),

    #[error("search diverged after {0} iterations")]
    Diverged(usize),

    #[error("model vanishes on the loop (|eta| = {0:e})")]
    ZeroOnLoop(f64),

    #[error("winding number is not an integer after refinement (raw = {0})")]
    NonIntegerWinding(f64),

    #[error("square-root branch is ambiguous at sample {0}")]
    BranchAmbiguity(usize),

    #[error("winding number {winding} disagrees with exchange = {exchange}")]
    InconsistentCertificate { winding: i64, exchange: bool },

    #[error("eigenvector gauge cannot be aligned")]
    GaugeMismatch,

    #[error("octagon point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable code used on the command line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NoConvergence(_) => "NoConvergence",
            Error::SingularShift { .. } => "SingularShift",
            Error::AmbiguousTracking { .. } => "AmbiguousTracking",
            Error::NegativeField(_) => "NegativeField",
            Error::DegenerateElimination(_) => "DegenerateElimination",
            Error::TrackingJump(_) => "TrackingJump",
            Error::ContinuationFailed(_) => "ContinuationFailed",
            Error::IterationCapReached(_) => "IterationCapReached",
            Error::Diverged(_) => "Diverged",
            Error::ZeroOnLoop(_) => "ZeroOnLoop",
            Error::NonIntegerWinding(_) => "NonIntegerWinding",
            Error::BranchAmbiguity(_) => "BranchAmbiguity",
            Error::InconsistentCertificate { .. } => "InconsistentCertificate",
            Error::GaugeMismatch => "GaugeMismatch",
            Error::AtPoint { source, .. } => source.code(),
            Error::InvalidInput(_) => "InvalidInput",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }

    /// Strips any point annotation.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
