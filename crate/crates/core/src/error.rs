use thiserror::Error;

/// Errors raised by the switched-system machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("malformed schedule: {0}")]
    Structure(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("integration diverged at node {node} (t = {t})")]
    IntegrationDiverged { node: usize, t: f64 },

    #[error("solver diverged: {0}")]
    SolverDiverged(String),

    #[error("combinatorial budget exceeded: {0}")]
    BudgetExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::Domain { what, value, lo, hi })
    }
}
