use thiserror::Error;

/// Errors raised anywhere in the discretization pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the admissible domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The grid is too coarse to resolve the domain.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A gradient was requested where the weight is not differentiable.
    #[error("singular weight gradient at ({x}, {y})")]
    SingularGradient { x: f64, y: f64 },

    /// A quadrature integrand produced a non-finite value.
    #[error("non-finite integrand value at ({x}, {y})")]
    Evaluation { x: f64, y: f64 },

    /// The diffusion coefficient is not uniformly positive.
    #[error("coercivity violated: coefficient {value} at ({x}, {y})")]
    Coercivity { value: f64, x: f64, y: f64 },

    /// The weighted quotient f/w blew up near a projection cell.
    #[error("projection blow-up for basis {index}: {detail}")]
    Blowup { index: usize, detail: String },

    /// A nonlinear iteration produced non-finite values.
    #[error("iterate diverged: {0}")]
    Divergence(String),

    /// An iterative solver did not reach its tolerance.
    #[error("{method} did not converge after {iterations} iterations (residual history tail {tail:?})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        tail: Vec<f64>,
    },

    /// Newton line search could not find a descent step.
    #[error("line search stagnated at eps = {eps:e}, residual = {residual:e}")]
    Stagnation { eps: f64, residual: f64 },

    /// The saddle-point system is singular.
    #[error("inf-sup failure: {0}; try a smaller pressure space")]
    InfSup(String),

    /// Invalid configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Machine-readable category used by the command line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Domain(_) | Error::Resolution(_) => "input",
            _ => "solver",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
