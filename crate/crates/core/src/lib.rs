//! Matter-wave diffraction at absorptive standing-wave light gratings.
//!
//! Positions are measured in units of the grating period `d` throughout the
//! numerical core; physical units only appear in [`params`].

pub mod dynamics;
pub mod error;
pub mod farfield;
pub mod grating;
pub mod kernel;
pub mod nearfield;
pub mod ode;
pub mod params;
pub mod quad;
pub mod rabi;
pub mod specfun;
pub mod talbot;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
