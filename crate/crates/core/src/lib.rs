//! Numerical core for ideal degenerate Fermi gases in atom-chip microtraps.
//!
//! Everything here is pure computation in SI units: Fermi and Bose
//! functions, harmonic-trap thermodynamics, in-trap and time-of-flight
//! density profiles, Biot-Savart fields of chip wires, RF-dressed adiabatic
//! potentials, evaporation design rules and time-of-flight image fits.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and unit conversion at the boundary live in the
//! `fermichip` crate.

#![no_std]
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::too_many_arguments
)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod constants;
pub mod density;
pub mod dressing;
mod error;
pub mod evaporation;
pub mod field;
pub mod fit;
pub mod numerics;
pub mod polylog;
pub mod regression;
pub mod thermo;

pub use error::{Error, Result};

/// Cartesian 3-vector in metres (positions) or tesla (fields).
pub type Vec3 = nalgebra::Vector3<f64>;
