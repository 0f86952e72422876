use thiserror::Error;

use crate::gspt::RegionLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("position {x} lies outside the corridor [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },

    #[error("invalid width profile: {0}")]
    InvalidProfile(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vector has {got} entries, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },

    /// Newton failed. Carries the last iterate so callers can inspect it.
    #[error("newton iteration failed at epsilon = {epsilon:e} after {iterations} iterations (residual {residual:e}): {reason}")]
    NonConvergence {
        epsilon: f64,
        iterations: usize,
        residual: f64,
        reason: &'static str,
        last_iterate: Vec<f64>,
    },

    #[error("profile not supported here: {0}")]
    UnsupportedProfile(String),

    #[error("singular solution is not unique on {0} (a continuum of singular solutions exists)")]
    NonUnique(RegionLabel),

    #[error("layer problem has no equilibria for j = {0} > 1/4")]
    NoEquilibria(f64),

    #[error("layer orbit from rho = {start} at j = {j} is repelled to infinity")]
    RepelledToInfinity { j: f64, start: f64 },

    #[error("reduced orbit crosses the fold at xi = {xi}: 4J = {four_j} exceeds k = {k}")]
    FoldCrossing { xi: f64, four_j: f64, k: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the input lies outside what the model (or one of its
    /// analytic reductions) covers, as opposed to a numerical failure.
    pub fn is_domain_rejection(&self) -> bool {
        matches!(
            self,
            Error::OutOfDomain { .. }
                | Error::InvalidProfile(_)
                | Error::InvalidParameter(_)
                | Error::SizeMismatch { .. }
                | Error::UnsupportedProfile(_)
                | Error::NonUnique(_)
                | Error::NoEquilibria(_)
                | Error::RepelledToInfinity { .. }
                | Error::FoldCrossing { .. }
        )
    }
}
