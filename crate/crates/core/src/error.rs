use thiserror::Error;

use crate::model::ModelError;
use crate::odecore::OdeError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("profile is not a ground state: sign change near r = {r}")]
    NotGroundState { r: f64 },
    #[error("eigenpair on the wrong branch: {detail}")]
    WrongBranch { mu: f64, detail: String },
    #[error("sector {sector} does not belong to dimension {dimension}")]
    SectorMismatch { dimension: usize, sector: String },
    #[error("far-field fit is ill-conditioned (condition number {condition:.3e})")]
    IllConditionedFit { condition: f64 },
    #[error("index of {sector} is uncertified: far-field asymptote has a root at r = {root:.4}")]
    Uncertified { sector: String, root: f64 },
    #[error("indexes increase with the harmonic degree: {indexes:?}")]
    MonotonicityViolated { indexes: Vec<usize> },
    #[error("operator is nearly singular on this sector (pivot ratio {pivot_ratio:.3e})")]
    NearSingularOperator { pivot_ratio: f64 },
    #[error("{sector} has index {index} but only {directions} projection direction(s)")]
    IndexExceedsDirections { sector: String, index: usize, directions: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
