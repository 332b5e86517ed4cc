//! Periodic 2D incompressible Navier–Stokes with an elastically tethered
//! immersed-boundary particle, plus the tooling to verify its convergence.

pub mod cli;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod sim;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
