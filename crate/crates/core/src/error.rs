use std::fmt;

use thiserror::Error;

/// A single violated model invariant, as reported by [`crate::market::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    LogUtilityExcluded,
    NonpositiveRiskAversion(f64),
    NonpositiveBequestWeight(f64),
    NonpositiveInitialWealth(f64),
    NonpositiveHorizon(f64),
    DimensionMismatch(String),
    MoreAssetsThanFactors { assets: usize, factors: usize },
    SingularCovariance { min_eigenvalue: f64 },
    NegativeAmbiguityWeight { index: usize, value: f64 },
    NonFinite(String),
    InvalidSchedule(String),
    InvalidBox { index: usize, lower: f64, upper: f64 },
    InvalidConsumptionBand { lower: f64, upper: Option<f64> },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LogUtilityExcluded => write!(f, "log-utility excluded (risk aversion = 1)"),
            Self::NonpositiveRiskAversion(g) => write!(f, "risk aversion must be positive, got {g}"),
            Self::NonpositiveBequestWeight(b) => write!(f, "bequest weight must be positive, got {b}"),
            Self::NonpositiveInitialWealth(x) => {
                write!(f, "initial wealth must be positive, got {x}")
            }
            Self::NonpositiveHorizon(t) => write!(f, "horizon must be positive, got {t}"),
            Self::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Self::MoreAssetsThanFactors { assets, factors } => {
                write!(f, "volatility has {assets} assets but only {factors} Brownian factors")
            }
            Self::SingularCovariance { min_eigenvalue } => write!(
                f,
                "singular covariance: smallest eigenvalue {min_eigenvalue:e} <= 1e-12"
            ),
            Self::NegativeAmbiguityWeight { index, value } => {
                write!(f, "negative ambiguity weight: eta[{index}] = {value}")
            }
            Self::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Self::InvalidSchedule(msg) => write!(f, "invalid rate schedule: {msg}"),
            Self::InvalidBox { index, lower, upper } => {
                write!(f, "box bound {index}: lower {lower} exceeds upper {upper}")
            }
            Self::InvalidConsumptionBand { lower, upper } => match upper {
                Some(u) => write!(f, "consumption band requires 0 <= lower < upper, got [{lower}, {u}]"),
                None => write!(f, "consumption floor must be finite and >= 0, got {lower}"),
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid inputs: {}", join_issues(.0))]
    Validation(Vec<ValidationIssue>),

    #[error("singular covariance matrix (smallest eigenvalue {min_eigenvalue:e})")]
    SingularCovariance { min_eigenvalue: f64 },

    #[error("scale factor {index} must be positive, got {value}")]
    NonpositiveScale { index: usize, value: f64 },

    #[error("{curve} lost positivity at node {node} (value {value:e}); grid too coarse or inputs invalid")]
    PositivityLoss {
        curve: &'static str,
        node: usize,
        value: f64,
    },

    #[error("utility loss {value} outside [-1e-8, 1 + 1e-8]; solution curves are inconsistent")]
    LossOutOfRange { value: f64 },

    #[error("ordering violated: {inequality} at t = {t} (lhs {lhs}, rhs {rhs})")]
    OrderingViolation {
        inequality: String,
        t: f64,
        lhs: f64,
        rhs: f64,
    },

    #[error("monotonicity violated: {property} at t = {t} between eta = {from} and eta = {to}")]
    MonotonicityViolation {
        property: String,
        t: f64,
        from: f64,
        to: f64,
    },

    #[error(
        "Monte Carlo estimate {estimate} is {z:.2} standard errors from the analytic value {analytic} \
         (stderr {stderr:e}, {paths} paths)"
    )]
    ConsistencyFailure {
        estimate: f64,
        stderr: f64,
        analytic: f64,
        z: f64,
        paths: usize,
    },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::SingularCovariance { .. }
            | Error::NonpositiveScale { .. }
            | Error::Grid(_)
            | Error::InvalidArgument(_)
            | Error::Config(_) => 2,
            Error::OrderingViolation { .. } | Error::MonotonicityViolation { .. } => 3,
            Error::ConsistencyFailure { .. } => 4,
            Error::PositivityLoss { .. } | Error::LossOutOfRange { .. } | Error::Io(_) => 1,
        }
    }
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
