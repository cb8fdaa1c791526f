use alloc::boxed::Box;
use alloc::string::String;

use crate::expfit::ExpSumApproximation;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge: tail estimate {tail:.3e} after {terms} terms")]
    ConvergenceFailure { terms: usize, tail: f64 },

    #[error("exponential fit stopped at sup error {:.3e} with {} terms", best.sup_error, best.terms.len())]
    ToleranceNotReached { best: Box<ExpSumApproximation> },

    #[error("kernel tail is identically zero; nothing to fit")]
    DegenerateKernel,

    #[error("chain length {length} exceeds the dense limit of {limit} sites")]
    SizeLimit { length: usize, limit: usize },

    #[error("eigensolver did not converge: best residual {residual:.3e}")]
    NoConvergence { residual: f64 },

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("no interior maximum on the scanned interval")]
    NoInteriorPeak,

    #[error("singular fit: Jacobian is rank deficient")]
    SingularFit,

    #[error("no propagating front beyond the near field")]
    NoFront,

    #[error("insufficient span: {0}")]
    InsufficientSpan(String),

    #[error("time step rejected: unitarity defect {defect:.3e}")]
    StepRejected { defect: f64 },
}

impl Error {
    /// Stable upper-case name used in machine-readable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DOMAIN_ERROR",
            Error::ConvergenceFailure { .. } => "CONVERGENCE_FAILURE",
            Error::ToleranceNotReached { .. } => "TOLERANCE_NOT_REACHED",
            Error::DegenerateKernel => "DEGENERATE_KERNEL",
            Error::SizeLimit { .. } => "SIZE_LIMIT",
            Error::NoConvergence { .. } => "NO_CONVERGENCE",
            Error::IllConditioned(_) => "ILL_CONDITIONED",
            Error::NoInteriorPeak => "NO_INTERIOR_PEAK",
            Error::SingularFit => "SINGULAR_FIT",
            Error::NoFront => "NO_FRONT",
            Error::InsufficientSpan(_) => "INSUFFICIENT_SPAN",
            Error::StepRejected { .. } => "STEP_REJECTED",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
