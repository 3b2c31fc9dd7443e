use thiserror::Error;

use crate::expr::ExprError;

/// Everything that can go wrong while evaluating world functions and the
/// objects built on top of them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point does not belong to the space domain: {0}")]
    DomainMismatch(String),

    #[error("world function is negative ({sigma}); the metric is imaginary")]
    NegativeSigma { sigma: f64 },

    #[error("triangle inequality violated for sides ({a}, {b}, {c})")]
    TriangleInequalityViolated { a: f64, b: f64, c: f64 },

    #[error("vector has vanishing squared length ({squared_length})")]
    ZeroVector { squared_length: f64 },

    #[error("basis must contain at least two points, got {0}")]
    BasisTooSmall(usize),

    #[error("basis order {order} exceeds the supported cap of {cap}")]
    OrderCap { order: usize, cap: usize },

    #[error("invalid world-function table: {0}")]
    InvalidTable(String),

    #[error("invalid space specification: {0}")]
    InvalidSpec(String),

    #[error("point {point:?} lies inside the hole of radius {radius}")]
    PointInsideHole { point: Vec<f64>, radius: f64 },

    #[error("triangle area is imaginary (F_2 = {f2})")]
    ImaginaryArea { f2: f64 },

    #[error("basis is degenerate (F_n = {determinant})")]
    DegenerateBasis { determinant: f64 },

    #[error("points still leave the tube at the maximal dimension {max_dim}")]
    DimensionExceedsCap { max_dim: usize },

    #[error("metric tensor is singular at {at:?}")]
    SingularMetric { at: Vec<f64> },

    #[error("geodesic solver did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NonConvergence { iterations: usize, gradient_norm: f64 },

    #[error("geodesic iterate left the chart domain at {at:?}")]
    ChartBoundary { at: Vec<f64> },

    #[error("mixed derivative matrix is singular (det = {det:e})")]
    SingularMixed { det: f64 },

    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
