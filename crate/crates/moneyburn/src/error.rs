use thiserror::Error as ThisError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Which side of a distribution's support a point fell on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportSide {
    Below,
    Above,
}

impl std::fmt::Display for SupportSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SupportSide::Below => write!(f, "below"),
            SupportSide::Above => write!(f, "above"),
        }
    }
}

/// Structured error type shared by every module.
#[derive(Debug, Clone, PartialEq, ThisError)]
pub enum Error {
    /// Adaptive quadrature ran out of subdivisions; carries the partial
    /// estimate so callers can decide whether it is still usable.
    #[error("quadrature did not converge (partial estimate {partial:e})")]
    NoConvergence { partial: f64 },

    /// Root bracket endpoints do not straddle a sign change.
    #[error("no sign change over bracket: f(lo)={f_lo:e}, f(hi)={f_hi:e}")]
    NoSignChange { f_lo: f64, f_hi: f64 },

    /// An iterative routine hit its iteration cap.
    #[error("iteration limit reached in {0}")]
    MaxIterations(&'static str),

    /// Arguments outside an operation's documented domain.
    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// A value was evaluated outside the distribution support.
    #[error("value {v} lies {side} the distribution support")]
    OutOfSupport { v: f64, side: SupportSide },

    /// A textual specification could not be parsed.
    #[error("cannot parse {what} from {input:?}: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },

    /// A required moment (typically the mean) diverges for the requested
    /// family/parameter combination.
    #[error("divergent moment: {0}")]
    DivergentMoment(String),

    /// Capacities, supplies, or constraint systems that cannot be met.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A function produced NaN or an infinity where a finite value is
    /// required.
    #[error("non-finite function value at {at}")]
    NonFinite { at: f64 },

    /// Linear-programming layer failure.
    #[error("linear program: {0}")]
    Lp(String),

    /// Output-file plumbing (used by the CLI layer).
    #[error("io: {0}")]
    Io(String),
}
