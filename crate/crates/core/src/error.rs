use num_complex::Complex64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point {0} is the pole of the map")]
    Pole(Complex64),

    #[error("circle passes through the pole of the map; its image is a line")]
    CircleThroughPole,

    #[error("invalid circle: {0}")]
    InvalidCircle(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("generator index {index} out of range for a domain with {count} circles")]
    BadIndex { index: usize, count: usize },

    #[error("not a reduced word: {0:?}")]
    NotReduced(Vec<usize>),

    #[error("contraction ratio {0} is not below 1; no rigorous tail bound")]
    NoContraction(f64),

    #[error("ledger depth {depth} is insufficient (required depth: {required:?})")]
    InsufficientDepth {
        depth: usize,
        required: Option<usize>,
    },

    #[error("n = {n} exceeds the supported cap {cap}")]
    ScaleCap { n: usize, cap: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("not a CPGF file (bad magic)")]
    BadMagic,

    #[error("unsupported CPGF version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated CPGF file")]
    Truncated,

    #[error("coefficient sup norm {0} is not below 1")]
    CoefficientTooLarge(f64),

    #[error("Neumann iteration did not converge in {} iterations (last residual {:e})", .residuals.len(), .residuals.last().copied().unwrap_or(f64::NAN))]
    NonConvergence { residuals: Vec<f64> },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
