//! Pseudo-spectral solver and verification suite for a weakly regularized
//! model of rotationally constrained convection on the periodic box
//! [0,L]² × [0,1], in vorticity-streamfunction form.
//!
//! The crate provides the spectral operator core, the CNAB2 model integrator,
//! the velocity-truncated iterative approximation scheme, energy-ledger and
//! decay diagnostics, a perturbation-growth experiment, and a property-based
//! inequality lab. Everything is generic over the scalar type; `f64` aliases
//! are exported at the crate root.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod galerkin;
pub mod grid;
pub mod ineq;
pub mod ops;
pub mod params;
pub mod quad;
pub mod random;
pub mod scalar;
pub mod snapshot;
pub mod state;

mod fft;

pub use error::{Error, Result};
pub use field::{SpectralField, ZProfile};
pub use grid::SpectralGrid;
pub use params::{Dealias, Params};
pub use scalar::Scalar;
pub use state::ModelState;

pub type Grid64 = grid::SpectralGrid<f64>;
pub type Field64 = field::SpectralField<f64>;
pub type Profile64 = field::ZProfile<f64>;
pub type State64 = state::ModelState<f64>;
pub type Params64 = params::Params<f64>;
pub type Row64 = diagnostics::DiagnosticsRow<f64>;

pub type Grid32 = grid::SpectralGrid<f32>;
pub type Field32 = field::SpectralField<f32>;
pub type State32 = state::ModelState<f32>;
pub type Params32 = params::Params<f32>;
