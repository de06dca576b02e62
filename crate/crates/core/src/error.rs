use thiserror::Error;

use crate::graph::GraphError;

/// Failures of the secular and finite-element solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("graph has {components} components, operation needs a connected graph")]
    NotConnected { components: usize },
    #[error("wave number must be positive, got {0}")]
    NonPositiveKappa(f64),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error(
        "eigenvalue count mismatch below {sigma}: secular scan found {secular}, finite elements count {fem}"
    )]
    CountMismatch {
        sigma: f64,
        secular: usize,
        fem: usize,
    },
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),
    #[error("factorization of K - sigma M broke down at sigma = {sigma}")]
    FactorizationBreakdown { sigma: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}
