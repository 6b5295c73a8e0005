use thiserror::Error;

use crate::lattice::Vertex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate overflow stepping from {0}")]
    Overflow(Vertex),

    #[error("orientation value {0} is not one of -1, 0, 1")]
    InvalidOrientation(i64),

    #[error("support of {sites} sites exceeds the cap of {cap}")]
    ResourceCap { sites: usize, cap: usize },

    #[error(
        "quadrature did not reach tolerance {abs_tol:e} within {panels} panels \
         (best estimate {estimate}, achieved error {achieved:e})"
    )]
    Quadrature {
        estimate: f64,
        achieved: f64,
        abs_tol: f64,
        panels: usize,
    },

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadrature(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
