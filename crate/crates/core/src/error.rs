use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid points must be strictly increasing (t[{index}] = {next} does not exceed t[{}] = {prev})", index - 1)]
    NonMonotonic { index: usize, prev: f64, next: f64 },

    #[error("a grid needs at least 3 points, got {len}")]
    TooShort { len: usize },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("interval [{a}, {b}] is empty or degenerate")]
    BadInterval { a: f64, b: f64 },

    #[error("index {index} out of range (valid: {min}..={max})")]
    IndexOutOfRange { index: usize, min: usize, max: usize },

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    /// Evaluation of the nonlinearity failed at a concrete grid point.
    #[error("f(t[{index}] = {t}, x = {x}, y = {y}): {source}")]
    FEval {
        index: usize,
        t: f64,
        x: f64,
        y: f64,
        #[source]
        source: EvalError,
    },

    #[error("function is not in E: |u^Δ(t0)| = {left_defect}, |u(t_end) - g| = {right_defect}")]
    NotInE { left_defect: f64, right_defect: f64 },

    #[error("bounds are not certified: {0}")]
    Uncertified(String),

    #[error("fixed-point map leaves [0, 1]: f({x}) = {value}")]
    RangeViolation { x: f64, value: f64 },

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("singular Jacobian in Newton step")]
    SingularJacobian,
}
