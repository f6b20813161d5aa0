use thiserror::Error;

/// Errors produced by channel evaluation, quadrature and the identity checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} lies outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error(
        "numerical integration did not converge: estimate {value}, error estimate {error_estimate:e} \
         exceeds tolerance {tol:e} after {evaluations} evaluations"
    )]
    NonConvergence {
        value: f64,
        error_estimate: f64,
        tol: f64,
        evaluations: usize,
    },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("observation y = {y} has zero likelihood under every atom of the prior")]
    ZeroLikelihood { y: f64 },

    #[error("expected loss is infinite: {0}")]
    InfiniteLoss(String),

    #[error("absolute continuity violated: {0}")]
    AbsoluteContinuity(String),

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("finite-difference step {h} is larger than gamma = {gamma}")]
    StepUnderflow { gamma: f64, h: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, domain: impl Into<String>) -> Self {
        Error::Domain {
            what,
            value,
            domain: domain.into(),
        }
    }

    /// True for failures of the numerical machinery itself, as opposed to
    /// bad inputs or mathematically undefined quantities.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::Divergent(_) | Error::StepUnderflow { .. } | Error::ZeroLikelihood { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
