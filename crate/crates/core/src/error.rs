use alloc::string::String;

use crate::forcing::ForcingError;
use crate::mesh::MeshError;
use crate::solver::SolveError;

/// Errors raised while stepping or running a simulation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),

    #[error(transparent)]
    Forcing(#[from] ForcingError),

    #[error("linear solve failed: {0}")]
    Solve(#[from] SolveError),

    #[error("non-finite value in {field} at node {node}")]
    NonFinite { field: &'static str, node: usize },

    #[error("array length {found} does not match node count {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "stability gate refused tau = {tau} s: node {node} has D = {drag:e} 1/s and critical step tau_c = {tau_c} s"
    )]
    GateViolation {
        tau: f64,
        node: usize,
        drag: f64,
        tau_c: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("output sink failed: {0}")]
    Sink(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: alloc::boxed::Box::new(self),
        }
    }

    /// Innermost error, looking through step annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_gate_violation(&self) -> bool {
        matches!(self.root(), Error::GateViolation { .. })
    }
}
