use thiserror::Error;

use crate::diagnostics::DiagnosticsRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too small: n = {0} (need n >= 8)")]
    GridTooSmall(usize),
    #[error("grid size must be even, got n = {0}")]
    OddGrid(usize),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },
    #[error("derivative order {0} outside 1..=6")]
    DerivativeOrder(u32),
    #[error("quadrature needs at least 2 nodes, got {0}")]
    QuadratureOrder(usize),
    #[error("y = {0} outside [0, 1]")]
    OutOfStrip(f64),
    #[error("expression error at column {pos}: {msg}")]
    Expr { pos: usize, msg: String },
    #[error("forcing check failed: {0}")]
    Forcing(String),
    #[error("pressure needs dh/dt when chi is active")]
    MissingRate,
    #[error("inner solve did not converge after {iters} iterations (residual {residual:.3e})")]
    InnerDivergence { iters: usize, residual: f64 },
    #[error("positivity violated at node {node} (h = {value:.3e}) at t = {t:.6e}")]
    PositivityViolation { node: usize, t: f64, value: f64 },
    #[error("time step underflow at t = {t:.6e} (dt = {dt:.3e}): {reason}")]
    UnrecoverableStep {
        t: f64,
        dt: f64,
        reason: String,
        diagnostics: Box<Vec<DiagnosticsRecord>>,
    },
    #[error("invalid diagnostics window: {0}")]
    Window(String),
    #[error("epsilon must lie in (0, 1), got {0}")]
    EpsOutOfRange(f64),
    #[error("insufficient temporal resolution: {0}")]
    TemporalResolution(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("{file}:{line}: {msg}")]
    Config {
        file: String,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
