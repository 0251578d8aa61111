use thiserror::Error;

/// Errors raised by the solvers, simulators and configuration loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("scenario has no contact rates; supply [contact_rates] or estimate them from mobility")]
    MissingContactRates,

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e}, last iterate {last_iterate:?})")]
    Convergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("capacity error: requested {requested} distinct source nodes but only {available} exist")]
    Capacity { requested: usize, available: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
