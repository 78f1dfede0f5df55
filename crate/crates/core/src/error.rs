use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid experiment or environment configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Malformed data: out-of-range losses, bad mixtures, mismatched lengths.
    #[error("validation error: {0}")]
    Validation(String),
    /// An API was called in a state that does not allow it.
    #[error("usage error: {0}")]
    Usage(String),
    /// A numeric argument lies outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("trial with seed {seed} failed: {source}")]
    Trial {
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
