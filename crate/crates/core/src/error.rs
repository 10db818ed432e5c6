use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tabulated potential does not cover [{need_lo}, {need_hi}] (table spans [{have_lo}, {have_hi}])")]
    Coverage {
        need_lo: f64,
        need_hi: f64,
        have_lo: f64,
        have_hi: f64,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// An eigenvector reaches the box edge; the grid is too small for the problem.
    #[error("state {state} has boundary amplitude {amplitude:.3e} (limit {limit:.0e}); enlarge the grid")]
    GridClipping { state: usize, amplitude: f64, limit: f64 },

    #[error("target {target} is out of reach: {reason}")]
    Range { target: f64, reason: String },

    #[error("x = {x} lies outside [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    /// Trajectory left the tabulated range.
    #[error("trajectory left the table range [{lo}, {hi}] at t = {time} (x = {x})")]
    TableExit { time: f64, x: f64, lo: f64, hi: f64 },

    #[error("wave packet reached the box edge at t = {time} (amplitude {amplitude:.3e})")]
    Reflection { time: f64, amplitude: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("model invariant violated: {0}")]
    ModelInvariant(String),

    #[error("flow quality: {0}")]
    FlowQuality(String),

    #[error("step size collapsed to {step:.3e} in ln k at k = {k:.6e}")]
    Stiffness { k: f64, step: f64 },

    #[error("energy drift {drift:.3e} exceeds {limit:.0e} at t = {time}")]
    EnergyDrift { drift: f64, limit: f64, time: f64 },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config: {0}")]
    Config(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with scenario context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
