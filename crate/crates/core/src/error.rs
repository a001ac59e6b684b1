use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid coefficient set: {0}")]
    InvalidCoefficients(String),

    #[error("metric is not positive definite (eigenvalue {eigenvalue:e})")]
    NonPositiveMetric { eigenvalue: f64 },

    #[error("index {index} out of range (bound {bound})")]
    Index { index: usize, bound: usize },

    #[error("form is not admissible{}: smallest eigenvalue {min_eigenvalue:e}", point_suffix(*.point))]
    NotAdmissible {
        point: Option<usize>,
        min_eigenvalue: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("density must be positive and finite at point {point} (value {value:e})")]
    NonPositiveDensity { point: usize, value: f64 },

    #[error("cone condition violated at point {point}: minor margin {margin:e}")]
    ConeViolated { point: usize, margin: f64 },

    #[error("operation requires Kahler data (constant form plus a potential)")]
    NotKahler,

    #[error("Newton corrector stalled after {iterations} iterations (residual {residual_inf:e})")]
    NewtonStalled { residual_inf: f64, iterations: usize },

    #[error("Krylov solve did not converge after {iterations} iterations (relative residual {relative_residual:e})")]
    LinearSolveFailed {
        relative_residual: f64,
        iterations: usize,
    },

    #[error("continuation stalled at t = {t} (step {step:e})")]
    HomotopyStalled { t: f64, step: f64 },

    #[error("cone condition violated for the majorant density at point {point}: minor margin {margin:e}")]
    ConeViolatedForH { point: usize, margin: f64 },

    #[error("density {psi} falls below the compatibility constant {c} at point {point}")]
    HypothesisViolated { point: usize, psi: f64, c: f64 },

    #[error("normalizing constant became positive along the second stage: b = {b:e} at t = {t}")]
    MonotonicityViolated { t: f64, b: f64 },

    #[error("expression parse error: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("field dump format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

fn point_suffix(point: Option<usize>) -> String {
    match point {
        Some(p) => format!(" at point {p}"),
        None => String::new(),
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
