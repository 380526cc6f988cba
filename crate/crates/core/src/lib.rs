//! Simulation and analysis of broadband polarization-squeezed vacuum produced
//! by two orthogonally oriented single-pass type-I OPAs and measured by direct
//! detection.
//!
//! The crate is organised bottom-up:
//!
//! * [`stokes`] closed-form Bogoliubov model: photon numbers, Stokes variances
//!   with losses and the noise reduction factor (NRF).
//! * [`fock`] exact truncated two-mode Fock-space engine used as an oracle for
//!   [`stokes`] and as the generator of synthetic photon counts.
//! * [`detector`] virtual detection chain: amplification, electronic noise,
//!   numerical balancing, shot-noise reference and NRF estimation.
//! * [`spectral`] phase matching in BBO, the relative phase acquired in the
//!   second crystal, the squeezed fraction of the spectrum and the quartz-plate
//!   tilt-to-phase map.
//! * [`fitting`] damped Gauss-Newton least squares and the two model fits
//!   (gain curve and NRF interference curve).

pub mod detector;
pub mod error;
pub mod fitting;
pub mod fock;
pub mod kv;
pub mod rng;
pub mod simulation;
pub mod spectral;
pub mod stokes;

pub use error::{Error, Result};
pub use stokes::{BogoliubovCoeffs, Efficiency, OpaConfig, StokesIndex, StokesMoments};
