//! Wave-packet dynamics in a quartic double well compared against classical
//! motion in the quantum effective potential.
//!
//! The crate builds the zero-temperature effective potential `V_eff(x)` by
//! constrained minimization (a Legendre transform of tilted ground-state
//! energies), the wave-function renormalization `Z_eff(x)` from spectral
//! sums, an independent sharp-cutoff renormalization-group estimate of
//! `V_eff`, exact Crank–Nicolson evolution of Gaussian packets, and the
//! classical trajectories that extremize the truncated effective action.
//! The [`harness`] module wires these into reproducible scenarios.

// `!(a < b)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod classical;
pub mod effective;
pub mod error;
pub mod export;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod ode;
pub mod potential;
pub mod rgflow;
pub mod spectral;
pub mod spline;
pub mod tdse;

pub use error::{Error, Result};
pub use grid::{make_grid, Grid};
pub use potential::Potential;
