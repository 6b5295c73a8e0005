//! Green functions, hitting distributions and Martin kernels of the simple
//! random walk on the sign-oriented lattice ℍ.
//!
//! Three independent routes are provided and cross-checked against each other:
//!
//! * [`oracle`]: exact finite-horizon evolution of the walk's law (exact
//!   rationals or floats with a certified mass deficit),
//! * [`spectral`]: Fourier-integral closed forms evaluated by a quadrature
//!   that handles the inverse-square-root singularity at the origin,
//! * [`monte_carlo`]: trajectory simulation with reproducible counter-based
//!   random streams.
//!
//! [`martin`] assembles these into Martin kernels and directional asymptotics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod lattice;
pub mod martin;
pub mod monte_carlo;
pub mod oracle;
pub mod spectral;
pub mod weight;

pub use error::{Error, Result};
pub use lattice::{Kernel, Orientation, Vertex};
pub use spectral::{PhiVariant, QuadratureSpec};

/// Which computation produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Spectral,
    Oracle,
    MonteCarlo,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::Spectral => "spectral",
            Route::Oracle => "oracle",
            Route::MonteCarlo => "mc",
        }
    }
}

/// A scalar estimate with an error bound and its provenance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GreenValue {
    pub value: f64,
    pub error: f64,
    pub route: Route,
}

/// A Martin kernel value `K(x, y) = G(x, y) / G(o, y)` with propagated error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MartinValue {
    pub value: f64,
    pub error: f64,
    pub route: Route,
}
