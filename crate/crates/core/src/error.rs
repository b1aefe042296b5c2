use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("{op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Model construction or validation failed.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The requested computation is not defined for this model shape.
    #[error("{op} is unsupported here: {msg}")]
    Unsupported { op: &'static str, msg: String },

    /// Exact enumeration would visit more joint outcomes than allowed.
    /// Callers should fall back to the Monte Carlo estimator.
    #[error(
        "exact enumeration needs {cost} joint outcomes, budget is {budget}; \
         use the Monte Carlo estimator instead"
    )]
    BudgetExceeded { cost: u128, budget: u64 },

    /// Error produced while evaluating one cell of a parameter grid.
    #[error("at grid cell (kappa={kappa}, tau={tau}): {source}")]
    AtCell {
        kappa: f64,
        tau: f64,
        #[source]
        source: Box<Error>,
    },

    /// A feature value sat on the boundary of (0,1) where the density
    /// model is undefined; `index` locates the offending observation.
    #[error("feature {index} has value {value}, outside the open interval (0,1)")]
    FeatureOutOfRange { index: usize, value: f64 },

    /// Input file could not be parsed; `line` is 1-based.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    /// Attach grid coordinates to an error raised inside a surface cell.
    pub(crate) fn at_cell(self, kappa: f64, tau: f64) -> Self {
        Error::AtCell {
            kappa,
            tau,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
