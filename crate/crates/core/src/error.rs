use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// A floating-point result that violates a known bound by more than round-off.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A scenario or allocation violates one of its invariants.
    #[error("invalid {field}: {detail}")]
    Invalid { field: String, detail: String },

    /// Bisection was started on an interval whose endpoints do not bracket a sign change.
    #[error("bracket error: derivative has the same sign ({lower:.3e}, {upper:.3e}) at both ends of [{lo}, {hi}]")]
    Bracket {
        lo: f64,
        hi: f64,
        lower: f64,
        upper: f64,
    },

    #[error("{algorithm} did not converge within {cap} iterations (gap {gap:.3e}, threshold {threshold:.3e})")]
    NonConvergence {
        algorithm: &'static str,
        cap: usize,
        gap: f64,
        threshold: f64,
    },

    /// Writing results failed.
    #[error("output error: {0}")]
    Output(String),

    /// The requested operation is not supported at this problem size.
    #[error("capability error: {0}")]
    Capability(String),
}

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            detail: detail.into(),
        }
    }
}
