//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::timeseries::Period;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numerical => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quarter {0}: must be 1..=4")]
    InvalidQuarter(i64),

    #[error("cannot parse period {0:?}: expected YYYYQn")]
    ParsePeriod(String),

    #[error("series {name}: non-positive value {value} at {period}")]
    NonPositive {
        name: String,
        period: Period,
        value: f64,
    },

    #[error("series {name}: non-finite value at {period}")]
    NonFinite { name: String, period: Period },

    #[error("empty series: {0}")]
    EmptySeries(String),

    #[error("unknown series {0:?}")]
    UnknownSeries(String),

    #[error("duplicate series name {0:?}")]
    DuplicateName(String),

    #[error("no common periods among the requested series")]
    EmptyIntersection,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("HP filter needs at least 4 observations, got {0}")]
    SeriesTooShort(usize),

    #[error("smoothing parameter must be positive and finite, got {0}")]
    InvalidLambda(f64),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("too few observations after filtering: n = {n} (need at least {required})")]
    SmallSample { n: usize, required: usize },

    #[error("quantile level {0} outside (0, 1)")]
    InvalidTau(f64),

    #[error("insufficient data: n = {n} rows for p = {p} coefficients")]
    InsufficientData { n: usize, p: usize },

    #[error("singular design: columns {columns:?} are linearly dependent on the others")]
    SingularDesign { columns: Vec<String> },

    #[error("simplex did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("objective unbounded along a descent direction (degenerate design)")]
    Unbounded,

    #[error("bandwidth: {0}")]
    Bandwidth(String),

    #[error("kernel Hessian is numerically singular at bandwidth {bandwidth}; try a larger bandwidth")]
    SingularHessian { bandwidth: f64 },

    #[error("covariance: {0}")]
    Covariance(String),

    #[error("perfect fit: zero pinball loss, AIC undefined")]
    PerfectFit,

    #[error("model selection: {0}")]
    Selection(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("simulation diverged: |inflation| exceeded {limit} at step {step}")]
    Explosive { step: usize, limit: f64 },

    #[error("stage {stage}{}: {source}", .tau.map(|t| format!(" (tau = {t})")).unwrap_or_default())]
    Stage {
        stage: &'static str,
        tau: Option<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            InvalidTau(_) | InvalidLambda(_) | Config(_) => ErrorKind::Config,
            ParsePeriod(_) | InvalidQuarter(_) | NonPositive { .. } | NonFinite { .. }
            | EmptySeries(_) | UnknownSeries(_) | DuplicateName(_) | EmptyIntersection
            | LengthMismatch { .. } | Csv { .. } | SeriesTooShort(_) | SmallSample { .. }
            | InsufficientData { .. } | Io(_) => ErrorKind::Data,
            UndefinedCorrelation(_) | SingularDesign { .. } | NoConvergence(_) | Unbounded | Numerical(_)
            | Bandwidth(_) | SingularHessian { .. } | Covariance(_) | PerfectFit
            | Selection(_) | Explosive { .. } | Json(_) => ErrorKind::Numerical,
            Stage { source, .. } => source.kind(),
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str, tau: Option<f64>) -> Error {
        Error::Stage {
            stage,
            tau,
            source: Box::new(self),
        }
    }
}
