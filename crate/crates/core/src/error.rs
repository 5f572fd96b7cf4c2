use thiserror::Error;

use crate::index::ChainIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("the supplied vectors are linearly dependent")]
    DependentBasis,

    #[error("lazy sum has no locality entry for coordinate {coordinate}")]
    LocalityViolation { coordinate: i64 },

    #[error("norm majorant of a countable sum diverges")]
    Unbounded,

    #[error("weights needed up to index {needed} but only available up to {available}")]
    HorizonTooShort { needed: i64, available: i64 },

    #[error("no admissible index found within horizon {horizon}{}", chain_suffix(.chain))]
    NotFoundWithinHorizon { chain: Option<usize>, horizon: i64 },

    #[error("vector {index} not annihilated within the certificate bound {bound}")]
    ExceededBound { index: ChainIndex, bound: usize },

    #[error("chain too short to build a depth-{depth} preimage of {index}")]
    InsufficientChain { index: ChainIndex, depth: usize },

    #[error("immediate-predecessor coefficient vanishes at {index}")]
    SingularCoefficient { index: ChainIndex },

    #[error("no power up to {k_max} falls into the previous span")]
    NotNilpotentModulo { k_max: usize },

    #[error("vector already lies in the previous span")]
    AlreadyInSpan,

    #[error("provided vector x_{n} is not in the generalised kernel within k_max = {k_max}")]
    NotInGeneralizedKernel { n: usize, k_max: usize },

    #[error("provider exhausted after {built} of {requested} chains")]
    ProviderExhausted { built: usize, requested: usize },

    #[error("recognizer rejected the assembled operator at {index}: {reason}")]
    CertificateFailure { index: ChainIndex, reason: String },

    #[error("chain family violates ({condition}): {detail}")]
    InvariantViolation {
        condition: &'static str,
        detail: String,
    },

    #[error("blocks overlap at coordinate {coordinate}")]
    OverlappingBlocks { coordinate: i64 },

    #[error("lambda must be unimodular")]
    NotUnimodular,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schema error at {path}: {reason}")]
    Schema { path: String, reason: String },

    #[error("unknown tail rule `{rule}` at {path}")]
    UnknownTailRule { path: String, rule: String },
}

fn chain_suffix(chain: &Option<usize>) -> String {
    chain.map(|c| format!(" (chain {c})")).unwrap_or_default()
}
