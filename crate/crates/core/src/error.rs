use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no sign change found for root {m} of j_{l} below x = {limit}")]
    BesselBracket { l: u32, m: u32, limit: f64 },

    #[error("quadrature did not converge: last estimates {previous} and {current}")]
    Quadrature { previous: f64, current: f64 },

    #[error(
        "cubic has complex roots (discriminant {discriminant:e}); coefficients \
         a2={a2}, a1={a1}, a0={a0} do not come from a Hermitian manifold"
    )]
    ComplexRoots {
        a2: f64,
        a1: f64,
        a0: f64,
        discriminant: f64,
    },

    #[error("coherent-state tail {tail:e} exceeds {tolerance:e} at n_max = {n_max}; need n_max >= {required}")]
    Truncation {
        n_max: usize,
        tail: f64,
        tolerance: f64,
        required: usize,
    },

    #[error("singular coefficient system for manifold n = {n}")]
    Singular { n: i64 },

    #[error("integrator step violates stability guard: dt * rate = {product} > {limit}")]
    StepTooLarge { product: f64, limit: f64 },

    #[error("{0}")]
    Revival(String),

    #[error("malformed input at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
