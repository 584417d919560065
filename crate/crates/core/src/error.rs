use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument outside the mathematical domain of a function.
    #[error("{func}: argument {value} outside the domain ({detail})")]
    Domain {
        func: &'static str,
        value: f64,
        detail: &'static str,
    },

    /// Malformed input data (non-finite entries, wrong lengths, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),

    /// The characterization residual never changed sign on the scan grid.
    #[error("no sign change of the characterization residual for beta = {beta} on ({lo}, {hi})")]
    Bracket { beta: f64, lo: f64, hi: f64 },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,
}

impl Error {
    pub(crate) fn domain(func: &'static str, value: f64, detail: &'static str) -> Self {
        Error::Domain {
            func,
            value,
            detail,
        }
    }
}
