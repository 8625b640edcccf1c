use thiserror::Error;

pub type Result<T, E = MoutardError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoutardError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("grid {nx}x{ny} too small: centred stencils need at least 3 nodes per axis")]
    GridTooSmall { nx: usize, ny: usize },

    #[error("fields are sampled on different grids")]
    DomainMismatch,

    #[error("evaluation failed at node ({x}, {y}): {reason}")]
    SampleFailed { x: f64, y: f64, reason: String },

    #[error("point ({x}, {y}) lies outside the grid")]
    PointOutsideDomain { x: f64, y: f64 },

    #[error("basepoint ({x}, {y}) is not a grid node")]
    BasepointOffGrid { x: f64, y: f64 },

    #[error("constant {entry} must be pure imaginary, got {re}{im:+}i")]
    NonImaginaryConstant { entry: String, re: f64, im: f64 },

    #[error("{0}")]
    Shape(String),

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("det Ω vanishes (below threshold) at every node")]
    AllSingular,

    #[error("{0}")]
    Expr(#[from] crate::expr::ExprError),
}
