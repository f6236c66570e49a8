use alloc::string::String;

use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("no OPE entry for the pair ({0}, {1}) in either order")]
    MissingOpe(String, String),
    #[error("expression is not homogeneous")]
    NonHomogeneous,
    #[error("unsupported algebra family: {0}")]
    UnsupportedFamily(String),
    #[error("algebra has no Virasoro element")]
    NoVirasoro,
    #[error("bosonic generator `{0}` has non-positive weight; weights are unbounded below")]
    UnboundedWeights(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator does not act on this module: {0}")]
    UnsupportedAction(String),
    #[error("central charge is {0}, BRST differential requires 26")]
    Anomalous(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("truncation order {0} too short: {1}")]
    TruncationTooShort(i64, String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
