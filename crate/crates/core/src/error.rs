use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),

    #[error("index {index} out of range for {what} of length {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("maximum number of steps ({max_steps}) exceeded at t = {t}")]
    MaxStepsExceeded { max_steps: usize, t: f64 },

    #[error("non-finite state encountered at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeTooSmall { t: f64, h: f64 },

    #[error("Newton iteration did not converge in step {step} (t = {t}, residual {residual:e})")]
    NewtonFailed { step: usize, t: f64, residual: f64 },

    #[error("nonlinear solve did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("delayed read at t = {t} is not covered by the history")]
    HistoryCoverage { t: f64 },

    #[error("interpolation time {t} outside solution span [{t0}, {t1}]")]
    OutOfSpan { t: f64, t0: f64, t1: f64 },
}
