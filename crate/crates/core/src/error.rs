use crate::expr::{CoverageError, EvalError, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),
    #[error("domain coverage: {0}")]
    Coverage(#[from] CoverageError),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("denominator {0} vanishes identically on the sampling domain")]
    DenominatorVanishes(String),
    #[error("cross-check failed: {what} (residual {residual:e})")]
    CrossCheck { what: String, residual: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("initial condition is not admissible: {0}")]
    InadmissibleInitialCondition(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::InvalidInput(_) | Error::InvalidSystem(_) => 64,
            Error::Coverage(_) | Error::InadmissibleInitialCondition(_) => 65,
            Error::Eval(EvalError::UnboundParameter(_)) => 64,
            _ => 70,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
