use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the solvers, simulators and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {value} from `{field}` at {location:?}")]
    Evaluation {
        field: String,
        location: Vec<f64>,
        value: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("{what} out of floating-point range at {location:?}")]
    Range { what: String, location: Vec<f64> },

    #[error("{what}: value {value} at {location:?} is outside the domain of the transform")]
    Domain {
        what: String,
        location: Vec<f64>,
        value: f64,
    },

    #[error("division by {value:e} (below floor) at {location:?}")]
    Underflow { location: Vec<f64>, value: f64 },

    #[error("control undefined at {location:?}: {reason}")]
    ControlUndefined { location: Vec<f64>, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("truncation: {0}")]
    Truncation(String),

    #[error("initial density outside the perturbation class: overlap with ground state {overlap:e} exceeds {tolerance:e}")]
    PerturbationClass { overlap: f64, tolerance: f64 },

    #[error("grid of {cells} cells exceeds the cap of {cap}; use local mode or a smaller grid")]
    Size { cells: usize, cap: usize },

    #[error("query point {location:?} lies outside the solution domain")]
    Extrapolation { location: Vec<f64> },

    #[error("agent {agent} at {state:?}: {source}")]
    Agent {
        agent: usize,
        state: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

/// Return an evaluation error when `value` is not finite.
pub(crate) fn check_finite(field: &str, x: &[f64], value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Evaluation {
            field: field.to_string(),
            location: x.to_vec(),
            value,
        })
    }
}
