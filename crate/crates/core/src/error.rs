use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("order {requested} exceeds the supported maximum {max}")]
    OrderTooLarge { requested: usize, max: usize },

    #[error("singular evaluation: division by a jet with value {value:e}")]
    SingularEvaluation { value: f64 },

    #[error("derivative order overflow: {needed} more orders needed, {available} available")]
    OrderOverflow { needed: usize, available: usize },

    #[error("jet table of {coefficients} coefficients exceeds the budget of {budget}")]
    JetBudget { coefficients: u128, budget: u128 },

    #[error("functional is not a polynomial (division or negative power)")]
    NonPolynomial,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("spectrum has no nonzero eigenvalue")]
    EmptySpectrum,

    #[error("negative moment of order {alpha} diverges: {nonzero} nonzero eigenvalues, need more than {}", 2.0 * alpha)]
    DivergentMoment { nonzero: usize, alpha: f64 },

    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),

    #[error("test function violates its declared growth bound at x = {x}: |h| = {value} > {bound}")]
    NonIntegrable { x: f64, value: f64, bound: f64 },

    #[error("bracket {index} ({lo}, {hi}) has no sign change")]
    BracketSignFailure { index: usize, lo: f64, hi: f64 },

    #[error("degenerate denominator in least-squares estimate")]
    DegenerateDenominator,

    #[error("empty sample stream")]
    EmptySample,

    #[error("samples carry G_k up to k = {available}, k = {requested} requested")]
    MissingOrder { requested: usize, available: usize },

    #[error("exponents violate 2/r + 4/s = 1 with s >= 8, r > 2 (r = {r}, s = {s})")]
    ExponentRelation { r: f64, s: f64 },

    #[error("{rejected} of {total} samples rejected at the division guard, above the 0.1% limit")]
    ExcessiveRejection { rejected: u64, total: u64 },

    #[error("rate inconclusive: max standard error {max_se:e} exceeds half the smallest distance {min_distance:e}; try n >= {suggested_n}")]
    InconclusiveRate { max_se: f64, min_distance: f64, suggested_n: u64 },

    #[error("quadrature did not converge: error estimate {abserr:e} above tolerance {tolerance:e}")]
    QuadratureFailure { abserr: f64, tolerance: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { name, reason: reason.into() }
    }
}
