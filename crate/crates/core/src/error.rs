use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by the solvers and diagnostics.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A matrix argument left the domain where the operation is defined.
    #[error("domain error: {what} (det F = {det:.6e})")]
    Domain { what: &'static str, det: f64 },

    /// Invalid sizes, parameters or mismatched inputs.
    #[error("configuration error: {0}")]
    Config(String),

    /// The determinant guard tripped at a quadrature point during assembly.
    #[error("determinant guard: det = {det:.6e} at element {element}, quadrature point {qp}")]
    Guard { element: usize, qp: usize, det: f64 },

    /// An iterative solver ran out of iterations or stagnated.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e}): {context}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        context: String,
    },

    /// A diagnostic quantity could not be formed from the given solution.
    #[error("diagnostic failure: {0}")]
    Diagnostic(String),

    /// The truncation could not find any good point.
    #[error("truncation failure: {0}")]
    Truncation(String),
}
