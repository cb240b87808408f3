use thiserror::Error;

/// Errors raised by the simulator and the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The relay loop pole `|beta * h_rr|` is not inside the stability margin.
    #[error("unstable relay loop: |beta*h_rr| = {pole_magnitude} (must be < 1 - {margin})")]
    Unstable { pole_magnitude: f64, margin: f64 },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("singular subcarrier {k}: |response| = {magnitude:e}")]
    SingularSubcarrier { k: usize, magnitude: f64 },

    #[error("framing error: need {needed} samples, stream has {available}")]
    Framing { needed: usize, available: usize },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("recursive filter diverged at sample {index}")]
    Diverged { index: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
