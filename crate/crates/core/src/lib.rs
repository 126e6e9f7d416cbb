//! Pseudospectral simulation of the half-wave Schrodinger equation
//!
//! ```text
//! i u_t + u_xx - |D_y| u = mu |u|^(2k) u
//! ```
//!
//! on a periodic box, together with a Picard solver for the Duhamel
//! formulation and numerical checks of the estimates behind its contraction.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod evolver;
pub mod initial;
pub mod nonlinearity;
pub mod norms;
pub mod picard;
pub mod propagator;
pub mod snapshot;
pub mod spectral;

pub use error::{Error, Result};
pub use initial::{sample_function, InitialCondition};
pub use propagator::SimulationParams;
pub use spectral::{make_grid, Field, GridSpec, Spectrum};
