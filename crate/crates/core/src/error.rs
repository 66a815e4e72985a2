use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("odd total half-edge count {0}: every coupling set is empty and the moment vanishes")]
    EmptyEnumeration(usize),
    #[error("profile has {half_edges} half-edges, above the enumeration cap of {cap}")]
    CapExceeded { half_edges: usize, cap: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },
    #[error("h changes sign on the support; the one-interval regime is breached")]
    SupportSplitSuspected,
    #[error("point {0} lies on a branch cut and no side was given")]
    BranchCutEvaluation(f64),
    #[error("Lagrange multiplier spread {0:e} exceeds tolerance")]
    InconsistentEll(f64),
    #[error("point lies outside the endpoint disc of radius {radius}")]
    OutsideDisc { radius: f64 },
    #[error("weight e^(-N V) is not integrable: {0}")]
    DivergentWeight(String),
    #[error("Hankel determinant lost positivity at {digits} digits")]
    NonPositiveDeterminant { digits: u32 },
    #[error("precision exhausted at {digits} digits; raise GENUSCOUNT_PRECISION")]
    PrecisionExhausted { digits: u32 },
    #[error("argument {0} is outside the supported range")]
    OverflowRange(f64),
    #[error("lambda = {lambda} is within {margin} of an endpoint")]
    TooCloseToEdge { lambda: f64, margin: f64 },
    #[error("lambda = {0} is outside the validity neighbourhood of the edge model")]
    OutsideValidity(f64),
    #[error("region does not contain the evaluation point")]
    RegionMismatch,
    #[error("internal consistency check failed: {0}")]
    ConsistencyFault(String),
}

pub type Result<T> = std::result::Result<T, Error>;
