use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid process parameters: {0}")]
    InvalidParams(String),

    #[error("invalid time order: need 0 <= s < t, got s = {s}, t = {t}")]
    InvalidTimeOrder { s: f64, t: f64 },

    #[error("invalid time: need t > 0, got t = {0}")]
    InvalidTime(f64),

    #[error("q-binomial needs k <= n, got n = {n}, k = {k}")]
    BinomialRange { n: usize, k: usize },

    #[error("recurrence coefficient b_{0} = {1} is not positive")]
    NonPositiveRecurrence(usize, f64),

    #[error("eigensolver did not converge for eigenvalue {0}")]
    NoConvergence(usize),

    #[error("quadrature weight {index} is negative ({weight:e})")]
    NegativeWeight { index: usize, weight: f64 },

    #[error("moment order {order} exceeds exactness degree {max} of the quadrature")]
    MomentOrderTooHigh { order: usize, max: usize },

    #[error("polynomial degree {degree} too high for {points}-point quadrature")]
    DegreeTooHigh { degree: usize, points: usize },

    #[error("recurrence index {0} exceeds the cap of {cap}", cap = crate::recurrence::MAX_INDEX)]
    IndexCap(usize),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonPositiveRecurrence(..) | Error::NoConvergence(_) | Error::NegativeWeight { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
