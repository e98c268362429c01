use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular matrix (zero pivot at index {pivot})")]
    Singular { pivot: usize },

    #[error("singular Sylvester pencil: lambda_{i} + mu_{j} = {value:e}")]
    SingularPencil { i: usize, j: usize, value: f64 },

    #[error("{method} did not converge in {iterations} iterations (last increment {last:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("Neumann series diverges: norm ratio >= 1 for {streak} consecutive terms (last ratio {ratio:.3})")]
    Divergence { streak: usize, ratio: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("residual undefined: {0}")]
    UndefinedResidual(String),

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
