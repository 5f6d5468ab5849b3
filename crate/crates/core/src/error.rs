use std::fmt;

use thiserror::Error;

use crate::network::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Density left the physical range; the simulation cannot continue.
    #[error("non-physical state: {0}")]
    NonPhysicalState(String),

    #[error("infeasible flow: pressure-squared discriminant {discriminant:.6e} is negative")]
    InfeasibleFlow { discriminant: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid network topology:\n{}", ViolationList(.0))]
    Topology(Vec<Violation>),

    #[error(transparent)]
    NonConvergence(Box<NonConvergence>),

    #[error("singular Jacobian at Newton iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("time step ending at t = {time} s failed: {source}")]
    Step {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Semantic(String),

    #[error("unknown unit tag `{0}`")]
    UnknownUnit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the nonlinear solver, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NonConvergence(_) | Error::SingularJacobian { .. } => true,
            Error::Step { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

/// Newton failure carrying the best iterate seen and the residual history.
#[derive(Debug, Clone)]
pub struct NonConvergence {
    pub iterations: usize,
    pub best_iterate: Vec<f64>,
    pub best_residual: f64,
    pub residual_history: Vec<f64>,
}

impl fmt::Display for NonConvergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Newton did not converge after {} iterations (best scaled residual {:.3e})",
            self.iterations, self.best_residual
        )
    }
}

impl std::error::Error for NonConvergence {}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}
