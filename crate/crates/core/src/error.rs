//! Error type shared by the whole crate.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// System parameter vector has zero norm; no orthogonal transform exists.
    DegenerateParameterVector,
    /// Fewer data points than model coefficients.
    InsufficientDataLength { n_data: usize, order: usize },
    /// Matrix/vector dimensions do not agree.
    DimensionMismatch { expected: usize, got: usize },
    /// Quantizer breakpoints must start at 0 and strictly increase.
    NonMonotoneBreakpoints,
    /// Representative values must lie inside their subsections.
    RepresentativeOutsideCell { index: usize },
    /// Subsection budget must be even here (odd M reduces to even, caller converts).
    OddSubsectionCount(u32),
    /// Regressor Gram matrix is numerically rank deficient.
    RankDeficient { cond_estimate: f64 },
    /// Adaptive quadrature hit its depth limit before reaching the tolerance.
    QuadratureNonConvergence { partial: f64, error_bound: f64 },
    /// A design precondition failed (zero spread, empty density, ratio 0, ...).
    DegenerateDesign(String),
    /// Cumulative subsection density cannot be inverted.
    NonInvertibleCumulative,
    /// Probabilistic bound infeasible for the requested reliability/data length.
    InfeasibleBound(String),
    /// A density failed validation (not normalized, negative, bad grid).
    InvalidDensity(String),
    /// A recursion/fit needs a longer input sequence.
    SequenceTooShort { len: usize, need: usize },
    /// Operation does not support the requested configuration.
    Unsupported(String),
}

impl std::fmt::Display for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Error::DegenerateParameterVector => write!(f, "degenerate parameter vector"),
            Error::InsufficientDataLength { n_data, order } => {
                write!(f, "insufficient data length: N = {n_data} < n = {order}")
            }
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NonMonotoneBreakpoints => {
                write!(f, "breakpoints must start at 0 and strictly increase")
            }
            Error::RepresentativeOutsideCell { index } => {
                write!(f, "representative {index} lies outside its subsection")
            }
            Error::OddSubsectionCount(m) => {
                write!(f, "subsection count M = {m} must be even (odd M reduces to even)")
            }
            Error::RankDeficient { cond_estimate } => {
                write!(f, "rank-deficient regressors (condition estimate {cond_estimate:.3e})")
            }
            Error::QuadratureNonConvergence { partial, error_bound } => write!(
                f,
                "quadrature failed to converge (partial estimate {partial:.6e}, error bound {error_bound:.3e})"
            ),
            Error::DegenerateDesign(msg) => write!(f, "degenerate design: {msg}"),
            Error::NonInvertibleCumulative => {
                write!(f, "cumulative subsection density is not invertible")
            }
            Error::InfeasibleBound(msg) => write!(f, "infeasible bound: {msg}"),
            Error::InvalidDensity(msg) => write!(f, "invalid density: {msg}"),
            Error::SequenceTooShort { len, need } => {
                write!(f, "sequence too short: length {len}, need at least {need}")
            }
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
